"""Declarative disease-onset rules and cohort labeling.

A rule is a disjunction of clauses: any clause firing makes the label
positive. Threshold clauses compare one feature against a cutoff;
flag clauses fire when a 0/1 feature (e.g. a medication flag) is 1.
Kidney-style rules additionally look along a participant's measurement
series: two consecutive values below the cutoff, or (optionally) a
fitted trend crossing the cutoff by the final measurement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .cohort import Cohort

_COMPARATORS = {
    ">=": lambda v, c: v >= c,
    ">": lambda v, c: v > c,
    "<=": lambda v, c: v <= c,
    "<": lambda v, c: v < c,
}


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdClause:
    feature: str
    comparator: str
    cutoff: float

    def __post_init__(self):
        if self.comparator not in _COMPARATORS:
            raise RuleError(f"unknown comparator {self.comparator!r}")

    def fires(self, value) -> bool:
        return _COMPARATORS[self.comparator](value, self.cutoff)


@dataclass(frozen=True)
class FlagClause:
    """Fires when the (binary) feature equals 1, e.g. 'on medication'."""

    feature: str

    def fires(self, value) -> bool:
        return value == 1


@dataclass(frozen=True)
class LongitudinalRule:
    """Series rule: below-cutoff twice in a row, or trend-line crossing.

    With use_regression, the label at the final measurement also turns
    positive when some measurement fell below the cutoff and the
    least-squares line over all measurements sits at or below the
    cutoff at the final measurement year.
    """

    feature: str
    cutoff: float
    consecutive: int = 2
    use_regression: bool = True


@dataclass(frozen=True)
class DiseaseRule:
    disease: str
    clauses: tuple = ()
    longitudinal: LongitudinalRule | None = None

    def __post_init__(self):
        if not self.clauses and self.longitudinal is None:
            raise RuleError(f"rule for {self.disease!r} has no clauses")

    @property
    def features(self) -> list[str]:
        names = [c.feature for c in self.clauses]
        if self.longitudinal is not None:
            names.append(self.longitudinal.feature)
        return list(dict.fromkeys(names))


def label_ckd_longitudinal(
    series: list[tuple[int, float]],
    cutoff: float = 60.0,
    consecutive: int = 2,
    use_regression: bool = True,
) -> list[int]:
    """Per-measurement labels for a sorted (year, value) series.

    A measurement is positive when it and the `consecutive - 1`
    immediately preceding measurements all lie strictly below the
    cutoff. With use_regression, the final measurement is also positive
    when any value has dipped below the cutoff and the OLS line of
    value against year evaluates at or below the cutoff at the final
    year (a single-point series counts as a flat line).
    """
    if not series:
        raise RuleError("empty measurement series")
    years = [y for y, _ in series]
    if years != sorted(years):
        raise RuleError("series must be sorted by year")
    values = [v for _, v in series]
    n = len(values)
    labels = [0] * n
    for i in range(n):
        if i >= consecutive - 1 and all(values[i - j] < cutoff for j in range(consecutive)):
            labels[i] = 1
    if use_regression and any(v < cutoff for v in values):
        if _ols_value_at(series, years[-1]) <= cutoff:
            labels[-1] = 1
    return labels


def _ols_value_at(series: list[tuple[int, float]], year: int) -> float:
    n = len(series)
    if n == 1:
        return series[0][1]
    xs = [float(y) for y, _ in series]
    ys = [v for _, v in series]
    xbar = sum(xs) / n
    ybar = sum(ys) / n
    sxx = sum((x - xbar) ** 2 for x in xs)
    if sxx == 0.0:
        return ybar
    slope = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / sxx
    return ybar + slope * (year - xbar)


def label_disease(cohort: Cohort, rule: DiseaseRule) -> dict[tuple[str, int], int | None]:
    """Map (participant, year) to 0/1, or None when nothing was measurable.

    Clause inputs that are missing are skipped; the label is missing
    only when every clause input (and any longitudinal input) is
    missing for that record.
    """
    known = set(cohort.feature_names)
    for name in rule.features:
        if name not in known:
            raise RuleError(f"rule feature {name!r} not in cohort schema")

    labels: dict[tuple[str, int], int | None] = {}
    for rec in cohort.records:
        fired = None
        for clause in rule.clauses:
            value = rec.values.get(clause.feature)
            if value is None:
                continue
            fired = (fired or False) or clause.fires(value)
        labels[rec.key] = None if fired is None else int(fired)

    if rule.longitudinal is not None:
        lr = rule.longitudinal
        for pid, recs in cohort.by_participant().items():
            series = [
                (r.year, float(r.values[lr.feature]))
                for r in recs
                if r.values.get(lr.feature) is not None
            ]
            if not series:
                continue
            series_labels = label_ckd_longitudinal(
                series, lr.cutoff, lr.consecutive, lr.use_regression
            )
            for (year, _), lab in zip(series, series_labels):
                prior = labels[(pid, year)]
                labels[(pid, year)] = lab if prior is None else int(prior or lab)
    return labels


def standard_rules() -> dict[str, DiseaseRule]:
    """The built-in chronic-disease criteria, keyed by disease name.

    Cutoffs follow the usual guideline values: baPWV >= 18 m/s,
    eGFR < 60 (series rule), FEV1/FVC < 0.70, MMSE <= 23 or dementia
    medication, HbA1c >= 6.5 / FPG >= 126 / antidiabetic treatment,
    LDL >= 120 / HDL < 40 / TG >= 150 / lipid medication, SBP >= 140 /
    DBP >= 90 / antihypertensives, GLFS-25 >= 16, BMI >= 25,
    KL grade >= 2, T-score < -1.0.
    """
    return {
        "arteriosclerosis": DiseaseRule(
            "arteriosclerosis", (ThresholdClause("baPWV", ">=", 18.0),)
        ),
        "ckd": DiseaseRule(
            "ckd", longitudinal=LongitudinalRule("eGFR", 60.0, consecutive=2, use_regression=True)
        ),
        "copd": DiseaseRule("copd", (ThresholdClause("FEV1_FVC", "<", 0.70),)),
        "dementia": DiseaseRule(
            "dementia",
            (ThresholdClause("MMSE", "<=", 23.0), FlagClause("dementia_med")),
        ),
        "diabetes": DiseaseRule(
            "diabetes",
            (
                ThresholdClause("HbA1c", ">=", 6.5),
                ThresholdClause("FPG", ">=", 126.0),
                FlagClause("diabetes_med"),
            ),
        ),
        "dyslipidemia": DiseaseRule(
            "dyslipidemia",
            (
                ThresholdClause("LDL", ">=", 120.0),
                ThresholdClause("HDL", "<", 40.0),
                ThresholdClause("TG", ">=", 150.0),
                FlagClause("lipid_med"),
            ),
        ),
        "hypertension": DiseaseRule(
            "hypertension",
            (
                ThresholdClause("SBP", ">=", 140.0),
                ThresholdClause("DBP", ">=", 90.0),
                FlagClause("bp_med"),
            ),
        ),
        "locomotive": DiseaseRule("locomotive", (ThresholdClause("GLFS25", ">=", 16.0),)),
        "obesity": DiseaseRule("obesity", (ThresholdClause("BMI", ">=", 25.0),)),
        "koa": DiseaseRule("koa", (ThresholdClause("KL_grade", ">=", 2.0),)),
        "osteopenia": DiseaseRule("osteopenia", (ThresholdClause("T_score", "<", -1.0),)),
    }


# --- rule config file (JSON) ------------------------------------------------


def rule_to_json(rule: DiseaseRule) -> dict:
    clauses = []
    for c in rule.clauses:
        if isinstance(c, ThresholdClause):
            clauses.append(
                {"type": "threshold", "feature": c.feature, "comparator": c.comparator, "cutoff": c.cutoff}
            )
        else:
            clauses.append({"type": "flag", "feature": c.feature})
    out: dict = {"disease": rule.disease, "clauses": clauses}
    if rule.longitudinal is not None:
        lr = rule.longitudinal
        out["longitudinal"] = {
            "feature": lr.feature,
            "cutoff": lr.cutoff,
            "consecutive": lr.consecutive,
            "use_regression": lr.use_regression,
        }
    return out


def rule_from_json(data: dict) -> DiseaseRule:
    clauses = []
    for c in data.get("clauses", ()):
        kind = c.get("type", "threshold")
        if kind == "threshold":
            clauses.append(ThresholdClause(c["feature"], c["comparator"], float(c["cutoff"])))
        elif kind == "flag":
            clauses.append(FlagClause(c["feature"]))
        else:
            raise RuleError(f"unknown clause type {kind!r}")
    longitudinal = None
    if "longitudinal" in data:
        lr = data["longitudinal"]
        longitudinal = LongitudinalRule(
            lr["feature"],
            float(lr["cutoff"]),
            int(lr.get("consecutive", 2)),
            bool(lr.get("use_regression", True)),
        )
    return DiseaseRule(data["disease"], tuple(clauses), longitudinal)


def load_rules(path: str | Path) -> dict[str, DiseaseRule]:
    """Read a rules config file: a JSON list of rule objects."""
    with Path(path).open(encoding="utf-8") as fh:
        data = json.load(fh)
    rules = [rule_from_json(d) for d in data]
    return {r.disease: r for r in rules}


def save_rules(rules: dict[str, DiseaseRule], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump([rule_to_json(r) for r in rules.values()], fh, indent=2)
        fh.write("\n")
