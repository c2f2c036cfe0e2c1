"""On-disk workspace: cohort, rules, models, diagrams, reports, manifest.

The manifest records every artifact with the seed and config hash that
produced it, and loading verifies that each referenced file exists.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .cohort import Cohort, load_cohort, load_schema, save_cohort, save_schema
from .rules import DiseaseRule, load_rules, save_rules

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


class WorkspaceError(ValueError):
    pass


def config_hash(payload) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.manifest: dict = {
            "version": MANIFEST_VERSION,
            "artifacts": {},
        }

    # ---- manifest --------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def save_manifest(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(
            json.dumps(self.manifest, indent=2, sort_keys=True), encoding="utf-8"
        )

    @classmethod
    def load(cls, root: str | Path) -> "Workspace":
        ws = cls(root)
        path = ws.manifest_path
        if not path.is_file():
            raise WorkspaceError(f"no manifest at {path}")
        manifest = json.loads(path.read_text(encoding="utf-8"))
        if manifest.get("version") != MANIFEST_VERSION:
            raise WorkspaceError(
                f"manifest version {manifest.get('version')!r} needs migration; "
                f"this build reads version {MANIFEST_VERSION}"
            )
        ws.manifest = manifest
        for name, entry in manifest.get("artifacts", {}).items():
            if not (ws.root / entry["path"]).is_file():
                raise WorkspaceError(
                    f"manifest references missing file {entry['path']!r} (artifact {name!r})"
                )
        return ws

    def add_artifact(
        self, name: str, relpath: str, kind: str, seed=None, config=None
    ) -> None:
        if not (self.root / relpath).is_file():
            raise WorkspaceError(f"artifact file {relpath!r} does not exist")
        entry = {"path": relpath, "kind": kind}
        if seed is not None:
            entry["seed"] = seed
        if config is not None:
            entry["config_hash"] = config_hash(config)
            entry["config"] = config
        self.manifest["artifacts"][name] = entry
        self.save_manifest()

    def artifact(self, name: str) -> dict:
        try:
            return self.manifest["artifacts"][name]
        except KeyError:
            raise WorkspaceError(f"workspace has no artifact {name!r}") from None

    def artifact_path(self, name: str) -> Path:
        return self.root / self.artifact(name)["path"]

    def artifacts_of_kind(self, kind: str) -> dict[str, dict]:
        return {
            name: entry
            for name, entry in self.manifest["artifacts"].items()
            if entry["kind"] == kind
        }

    def write_json(self, relpath: str, payload) -> Path:
        path = self.root / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        return path

    def read_json(self, relpath: str):
        return json.loads((self.root / relpath).read_text(encoding="utf-8"))

    # ---- standard artifacts ----------------------------------------------

    def store_cohort(self, cohort: Cohort, seed=None, config=None) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        save_cohort(cohort, self.root / "cohort.csv")
        save_schema(cohort.schema, self.root / "schema.json")
        self.save_manifest()
        self.add_artifact("cohort", "cohort.csv", "cohort", seed=seed, config=config)
        self.add_artifact("schema", "schema.json", "schema")

    def load_cohort(self) -> Cohort:
        schema = load_schema(self.artifact_path("schema"))
        return load_cohort(self.artifact_path("cohort"), schema)

    def store_rules(self, rules: dict[str, DiseaseRule] | list[DiseaseRule]) -> None:
        if not isinstance(rules, dict):
            rules = {r.disease: r for r in rules}
        self.root.mkdir(parents=True, exist_ok=True)
        save_rules(rules, self.root / "rules.json")
        self.save_manifest()
        self.add_artifact("rules", "rules.json", "rules")

    def load_rules(self) -> dict[str, DiseaseRule]:
        return load_rules(self.artifact_path("rules"))

    def model_name(self, disease: str) -> str:
        return f"model:{disease}"

    def diseases_with_models(self) -> list[str]:
        return sorted(
            name.split(":", 1)[1] for name in self.artifacts_of_kind("model")
        )
