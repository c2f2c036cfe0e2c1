"""Longitudinal cohort data model and file ingestion.

A cohort is a set of per-participant, per-year records over a fixed
feature schema. Values may be missing (``None``). The on-disk format is
plain CSV with header ``participant_id,year,<feature...>`` where an
empty cell means missing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

CONTINUOUS = "continuous"
BINARY = "binary"
CATEGORICAL = "categorical"

_KINDS = (CONTINUOUS, BINARY, CATEGORICAL)


class CohortError(ValueError):
    """Schema violation or malformed cohort input."""


@dataclass(frozen=True)
class FeatureMeta:
    """Declared name, kind and clinical direction of one feature.

    ``risk_direction`` is "high" when large values indicate risk (e.g.
    HbA1c) and "low" when small values do (e.g. eGFR); it is required
    only for features fed to limit-value extraction.
    """

    name: str
    kind: str = CONTINUOUS
    levels: tuple[str, ...] = ()
    unit: str = ""
    risk_direction: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise CohortError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.kind == CATEGORICAL and not self.levels:
            raise CohortError(f"categorical feature {self.name!r} needs a level set")
        if self.risk_direction not in (None, "high", "low"):
            raise CohortError(
                f"risk_direction must be 'high' or 'low', got {self.risk_direction!r}"
            )


@dataclass
class Record:
    """One participant-year measurement row; missing values are None."""

    participant_id: str
    year: int
    values: dict[str, float | str | None] = field(default_factory=dict)

    def get(self, feature: str):
        return self.values.get(feature)

    @property
    def key(self) -> tuple[str, int]:
        return (self.participant_id, self.year)


class Cohort:
    """Validated collection of records over a feature schema."""

    def __init__(self, schema: list[FeatureMeta], records: list[Record]):
        names = [m.name for m in schema]
        if len(set(names)) != len(names):
            raise CohortError("feature names must be unique")
        self.schema = list(schema)
        self._meta = {m.name: m for m in schema}
        self._index: dict[tuple[str, int], Record] = {}
        for rec in records:
            if rec.key in self._index:
                raise CohortError(f"duplicate (participant, year) {rec.key}")
            self._index[rec.key] = rec
            self._check_values(rec)
        self.records = list(records)

    def _check_values(self, rec: Record) -> None:
        for name, value in rec.values.items():
            meta = self._meta.get(name)
            if meta is None:
                raise CohortError(f"record {rec.key} has unknown feature {name!r}")
            if value is None:
                continue
            if meta.kind == BINARY and value not in (0, 1, 0.0, 1.0):
                raise CohortError(
                    f"binary feature {name!r} must be 0/1, got {value!r} at {rec.key}"
                )
            if meta.kind == CATEGORICAL and value not in meta.levels:
                raise CohortError(
                    f"categorical feature {name!r} has unknown level {value!r} at {rec.key}"
                )

    @property
    def feature_names(self) -> list[str]:
        return [m.name for m in self.schema]

    def meta(self, name: str) -> FeatureMeta:
        return self._meta[name]

    def participants(self) -> list[str]:
        seen = dict.fromkeys(r.participant_id for r in self.records)
        return list(seen)

    def by_participant(self) -> dict[str, list[Record]]:
        """Records grouped by participant, sorted by year within each."""
        groups: dict[str, list[Record]] = {}
        for rec in self.records:
            groups.setdefault(rec.participant_id, []).append(rec)
        for recs in groups.values():
            recs.sort(key=lambda r: r.year)
        return groups

    def record(self, participant_id: str, year: int) -> Record:
        try:
            return self._index[(participant_id, year)]
        except KeyError:
            raise KeyError((participant_id, year)) from None

    def __len__(self) -> int:
        return len(self.records)


def load_cohort(path: str | Path, schema: list[FeatureMeta]) -> Cohort:
    """Parse a cohort CSV against a declared schema.

    Empty cells become missing values; non-numeric text in a numeric
    column is an error (no silent coercion). Errors report the
    offending 1-based line number.
    """
    path = Path(path)
    meta = {m.name: m for m in schema}
    records: list[Record] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CohortError(f"{path}: empty file") from None
        expected = {"participant_id", "year", *meta}
        if set(header) != expected or header[:2] != ["participant_id", "year"]:
            raise CohortError(
                f"{path}: header must be participant_id,year,<features matching schema>"
            )
        feature_cols = header[2:]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CohortError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            pid, year_text = row[0], row[1]
            try:
                year = int(year_text)
            except ValueError:
                raise CohortError(f"{path}:{lineno}: year {year_text!r} is not an integer") from None
            values: dict[str, float | str | None] = {}
            for name, cell in zip(feature_cols, row[2:]):
                cell = cell.strip()
                if cell == "":
                    values[name] = None
                elif meta[name].kind == CATEGORICAL:
                    values[name] = cell
                else:
                    try:
                        values[name] = float(cell)
                    except ValueError:
                        raise CohortError(
                            f"{path}:{lineno}: feature {name!r} has non-numeric value {cell!r}"
                        ) from None
            records.append(Record(pid, year, values))
    try:
        return Cohort(schema, records)
    except CohortError as exc:
        raise CohortError(f"{path}: {exc}") from None


def save_cohort(cohort: Cohort, path: str | Path) -> None:
    """Write a cohort to CSV (inverse of load_cohort)."""
    path = Path(path)
    names = cohort.feature_names
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["participant_id", "year", *names])
        for rec in sorted(cohort.records, key=lambda r: r.key):
            row = [rec.participant_id, rec.year]
            for name in names:
                value = rec.values.get(name)
                if value is None:
                    row.append("")
                elif isinstance(value, str):
                    row.append(value)
                else:
                    row.append(repr(float(value)))
            writer.writerow(row)


def schema_to_json(schema: list[FeatureMeta]) -> list[dict]:
    out = []
    for m in schema:
        entry: dict = {"name": m.name, "kind": m.kind}
        if m.levels:
            entry["levels"] = list(m.levels)
        if m.unit:
            entry["unit"] = m.unit
        if m.risk_direction:
            entry["risk_direction"] = m.risk_direction
        out.append(entry)
    return out


def schema_from_json(data: list[dict]) -> list[FeatureMeta]:
    return [
        FeatureMeta(
            name=d["name"],
            kind=d.get("kind", CONTINUOUS),
            levels=tuple(d.get("levels", ())),
            unit=d.get("unit", ""),
            risk_direction=d.get("risk_direction"),
        )
        for d in data
    ]


def load_schema(path: str | Path) -> list[FeatureMeta]:
    with Path(path).open(encoding="utf-8") as fh:
        return schema_from_json(json.load(fh))


def save_schema(schema: list[FeatureMeta], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(schema_to_json(schema), fh, indent=2)
        fh.write("\n")
