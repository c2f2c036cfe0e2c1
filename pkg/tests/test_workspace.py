"""Workspace manifest: artifact tracking, integrity checks, config hashes."""

import json

import pytest

from hdpd.cohort import CONTINUOUS, Cohort, FeatureMeta, Record
from hdpd.rules import DiseaseRule, ThresholdClause
from hdpd.workspace import Workspace, WorkspaceError, config_hash


def _cohort():
    schema = [FeatureMeta("hba1c", CONTINUOUS, unit="%")]
    return Cohort(
        schema,
        [
            Record("p1", 2000, {"hba1c": 6.1}),
            Record("p1", 2001, {"hba1c": None}),
            Record("p2", 2000, {"hba1c": 7.2}),
        ],
    )


def _rule():
    return DiseaseRule("dm", [ThresholdClause("hba1c", ">=", 6.5)])


def test_config_hash_is_canonical():
    a = config_hash({"b": 1, "a": [1, 2]})
    b = config_hash({"a": [1, 2], "b": 1})
    assert a == b
    assert len(a) == 16
    assert int(a, 16) >= 0  # hex digest prefix
    assert config_hash({"a": [2, 1]}) != a


def test_round_trip_cohort_rules_and_manifest(tmp_path):
    ws = Workspace(tmp_path / "w")
    ws.store_cohort(_cohort(), seed=7, config={"n": 3})
    ws.store_rules([_rule()])

    back = Workspace.load(tmp_path / "w")
    cohort = back.load_cohort()
    assert [r.key for r in cohort.records] == [("p1", 2000), ("p1", 2001), ("p2", 2000)]
    assert cohort.records[1].get("hba1c") is None
    rules = back.load_rules()
    assert set(rules) == {"dm"}
    assert rules["dm"].clauses[0].cutoff == 6.5

    entry = back.artifact("cohort")
    assert entry["seed"] == 7
    assert entry["config_hash"] == config_hash({"n": 3})


def test_artifact_requires_existing_file(tmp_path):
    ws = Workspace(tmp_path)
    ws.save_manifest()
    with pytest.raises(WorkspaceError, match="does not exist"):
        ws.add_artifact("x", "missing.json", "report")
    ws.write_json("ok.json", {"fine": True})
    ws.add_artifact("x", "ok.json", "report")
    assert ws.artifact_path("x").name == "ok.json"
    assert ws.read_json("ok.json") == {"fine": True}


def test_load_rejects_dangling_manifest_entries(tmp_path):
    ws = Workspace(tmp_path)
    ws.write_json("reports/r.json", {"v": 1})
    ws.add_artifact("report:dm", "reports/r.json", "report")
    (tmp_path / "reports" / "r.json").unlink()
    with pytest.raises(WorkspaceError) as err:
        Workspace.load(tmp_path)
    assert "reports/r.json" in str(err.value)
    assert "report:dm" in str(err.value)


def test_load_requires_manifest(tmp_path):
    with pytest.raises(WorkspaceError, match="manifest"):
        Workspace.load(tmp_path / "nowhere")


def test_version_mismatch_is_an_error(tmp_path):
    ws = Workspace(tmp_path)
    ws.save_manifest()
    raw = json.loads(ws.manifest_path.read_text())
    raw["version"] = 99
    ws.manifest_path.write_text(json.dumps(raw))
    with pytest.raises(WorkspaceError, match="version 99"):
        Workspace.load(tmp_path)


def test_unknown_artifact_name(tmp_path):
    ws = Workspace(tmp_path)
    ws.save_manifest()
    with pytest.raises(WorkspaceError, match="no artifact"):
        ws.artifact("model:dm")


def test_artifacts_of_kind_and_model_names(tmp_path):
    ws = Workspace(tmp_path)
    ws.write_json("models/dm.json", {})
    ws.write_json("models/ckd.json", {})
    ws.write_json("reports/dm.json", {})
    ws.add_artifact("model:dm", "models/dm.json", "model")
    ws.add_artifact("model:ckd", "models/ckd.json", "model")
    ws.add_artifact("report:dm", "reports/dm.json", "report")
    assert set(ws.artifacts_of_kind("model")) == {"model:dm", "model:ckd"}
    assert ws.diseases_with_models() == ["ckd", "dm"]
    assert ws.model_name("dm") == "model:dm"


def test_store_rules_accepts_dict_or_list(tmp_path):
    ws = Workspace(tmp_path / "a")
    ws.store_rules({"dm": _rule()})
    ws2 = Workspace(tmp_path / "b")
    ws2.store_rules([_rule()])
    assert ws.load_rules().keys() == ws2.load_rules().keys()


def test_manifest_survives_artifact_overwrite(tmp_path):
    ws = Workspace(tmp_path)
    ws.write_json("models/dm.json", {"v": 1})
    ws.add_artifact("model:dm", "models/dm.json", "model", config={"k": 6})
    first = ws.artifact("model:dm")["config_hash"]
    ws.add_artifact("model:dm", "models/dm.json", "model", config={"k": 8})
    second = Workspace.load(tmp_path).artifact("model:dm")["config_hash"]
    assert first != second  # re-registering with a new config invalidates caches
