"""Read-only HTTP service over a workspace.

All responses are deterministic JSON; repeated identical requests are
served byte-for-byte from a cache keyed by the request parameters plus
the producing config hash, so config changes can never serve stale
diagrams. The service never mutates the workspace.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .analysis import feature_contribution, superimpose, ward_cluster
from .cohort import CATEGORICAL
from .dataset import TEST
from .diagrams import (
    MODE_ICE,
    MODE_PMICE,
    ActiveLearningConfig,
    DiagramEngine,
    diagram_to_json,
)
from .model_io import FittedModel, load_model
from .pipeline import (
    PipelineConfig,
    build_dataset,
    build_engine,
    dumps_canonical,
    parse_record_id,
    record_id,
    restrict_dataset,
)
from .workspace import Workspace, WorkspaceError, config_hash

_MODES = {
    "p-mice": MODE_PMICE,
    "pmice": MODE_PMICE,
    "2d-ice": MODE_ICE,
    "ice": MODE_ICE,
    "2dice": MODE_ICE,
}


def normalize_mode(mode: str) -> str:
    try:
        return _MODES[mode.strip().lower()]
    except KeyError:
        raise HTTPException(422, f"unknown mode {mode!r}; use 'p-mICE' or '2d-ICE'")


class HdpdRequest(BaseModel):
    record: str
    disease: str
    var_x: str
    var_y: str
    mode: str = MODE_PMICE
    # active search is the interactive default; CLI batch paths use full search
    active: bool = True
    budget: int = Field(default=50, ge=1)


class SuperimposeRequest(BaseModel):
    record: str
    diseases: list[str]
    var_x: str
    var_y: str


class WhatIfRequest(BaseModel):
    record: str
    disease: str
    overrides: dict[str, float | str] = Field(default_factory=dict)


class Session:
    """Immutable-after-load state shared by all requests."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace
        self.cohort = workspace.load_cohort()
        self.rules = workspace.load_rules()
        self._contexts: dict[str, tuple] = {}
        self._cache: dict[str, bytes] = {}
        self.record_ids = [record_id(r.participant_id, r.year) for r in self.cohort.records]
        self._record_set = set(self.record_ids)

    def context(self, disease: str):
        """(dataset, engine, config) for one disease, built once."""
        if disease in self._contexts:
            return self._contexts[disease]
        name = self.workspace.model_name(disease)
        try:
            entry = self.workspace.artifact(name)
        except WorkspaceError:
            raise HTTPException(404, f"no fitted model for disease {disease!r}")
        model = load_model(self.workspace.artifact_path(name))
        if not isinstance(model, FittedModel):
            raise HTTPException(500, f"artifact {name!r} lacks a decision threshold")
        config = PipelineConfig.from_json(entry.get("config", {}))
        rule = self.rules.get(disease)
        if rule is None:
            raise HTTPException(404, f"no labeling rule for disease {disease!r}")
        dataset = build_dataset(self.cohort, rule, config)
        dataset = restrict_dataset(dataset, list(model.features))
        fit = _LoadedFit(model, dataset)
        engine = build_engine(fit, config, disease)
        ctx = (dataset, engine, config, entry.get("config_hash", ""))
        self._contexts[disease] = ctx
        return ctx

    def require_record(self, rid: str) -> tuple[str, int]:
        if rid not in self._record_set:
            raise HTTPException(404, f"unknown record {rid!r}")
        return parse_record_id(rid)

    def cached(self, key_payload, compute) -> bytes:
        key = dumps_canonical(key_payload)
        hit = self._cache.get(key)
        if hit is None:
            hit = dumps_canonical(compute()).encode("utf-8")
            self._cache[key] = hit
        return hit


class _LoadedFit:
    """Just enough of a fit result for build_engine."""

    def __init__(self, model: FittedModel, dataset):
        self.model = model
        self.dataset = dataset


def _json_response(body: bytes) -> Response:
    return Response(content=body, media_type="application/json")


def _encoded_record(session: Session, dataset, rid: str):
    pid, year = session.require_record(rid)
    x0, miss0 = dataset.space.encode_row(session.cohort.record(pid, year).values)
    return pid, year, x0, miss0


def _require_pair(engine: DiagramEngine, miss0, var_x: str, var_y: str) -> None:
    if var_x == var_y:
        raise HTTPException(422, "var_x and var_y must differ")
    eligible = set(engine.eligible_features(miss0))
    for var in (var_x, var_y):
        if var not in engine.axis_features:
            raise HTTPException(
                422, f"{var!r} is not an intervention-capable model feature"
            )
        if var not in eligible:
            raise HTTPException(422, f"{var!r} is missing in this record")


def create_app(workspace_path: str) -> FastAPI:
    session = Session(Workspace.load(workspace_path))
    app = FastAPI(title="hdpd service", docs_url=None, redoc_url=None)
    app.state.session = session

    @app.get("/records")
    def records():
        return {"records": session.record_ids}

    @app.get("/diseases")
    def diseases():
        return {"diseases": session.workspace.diseases_with_models()}

    @app.get("/records/{rid}/features")
    def record_features(rid: str, disease: str | None = None):
        pid, year = session.require_record(rid)
        values = session.cohort.record(pid, year).values
        eligible = None
        model_features = None
        if disease is not None:
            dataset, engine, _, _ = session.context(disease)
            _, miss0 = dataset.space.encode_row(values)
            eligible = set(engine.eligible_features(miss0))
            model_features = {m.name for m in dataset.space.metas}
        features = []
        for meta in session.cohort.schema:
            v = values.get(meta.name)
            entry = {
                "name": meta.name,
                "kind": meta.kind,
                "value": v,
                "missing": v is None,
            }
            if meta.unit:
                entry["unit"] = meta.unit
            if eligible is not None:
                entry["in_model"] = meta.name in model_features
                entry["axis_eligible"] = meta.name in eligible
            features.append(entry)
        return {"record_id": rid, "features": features}

    @app.post("/hdpd")
    def hdpd(req: HdpdRequest):
        mode = normalize_mode(req.mode)
        dataset, engine, config, chash = session.context(req.disease)
        pid, year, x0, miss0 = _encoded_record(session, dataset, req.record)
        _require_pair(engine, miss0, req.var_x, req.var_y)
        key = {
            "op": "hdpd",
            "record": req.record,
            "disease": req.disease,
            "pair": [req.var_x, req.var_y],
            "mode": mode,
            "active": req.active,
            "budget": req.budget if req.active else None,
            "config": chash,
        }

        def compute():
            if req.active:
                al = ActiveLearningConfig(budget=req.budget)
                d = engine.diagram_active(x0, miss0, req.record, req.var_x, req.var_y, al, mode)
            else:
                d = engine.diagram_full(x0, miss0, req.record, req.var_x, req.var_y, mode)
            return diagram_to_json(d)

        return _json_response(session.cached(key, compute))

    @app.post("/hdpd/superimpose")
    def hdpd_superimpose(req: SuperimposeRequest):
        if not req.diseases:
            raise HTTPException(422, "need at least one disease")
        shared_axes = None
        key = {
            "op": "superimpose",
            "record": req.record,
            "diseases": req.diseases,
            "pair": [req.var_x, req.var_y],
            "configs": [],
        }
        plans = []
        skipped: dict[str, str] = {}
        for disease in dict.fromkeys(req.diseases):
            dataset, engine, _, chash = session.context(disease)
            pid, year, x0, miss0 = _encoded_record(session, dataset, req.record)
            try:
                _require_pair(engine, miss0, req.var_x, req.var_y)
            except HTTPException as exc:
                skipped[disease] = str(exc.detail)
                continue
            plans.append((disease, engine, x0, miss0))
            key["configs"].append(chash)
        if not plans:
            raise HTTPException(
                422, f"no requested disease supports the pair ({req.var_x}, {req.var_y})"
            )

        def compute():
            diagrams = []
            axes = None
            for disease, engine, x0, miss0 in plans:
                d = engine.diagram_full(x0, miss0, req.record, req.var_x, req.var_y, axes=axes)
                if axes is None:
                    axes = (d.axis_x, d.axis_y)
                diagrams.append(d)
            cells = superimpose(diagrams)
            head = diagrams[0]
            return {
                "record_id": req.record,
                "var_x": req.var_x,
                "var_y": req.var_y,
                "axis_x": [float(v) for v in head.axis_x],
                "axis_y": [float(v) for v in head.axis_y],
                "origin_x": head.origin_x,
                "origin_y": head.origin_y,
                "cells": cells,
                "jointly_free": bool(any(not c for row in cells for c in row)),
                "skipped": skipped,
            }

        return _json_response(session.cached(key, compute))

    @app.post("/whatif")
    def whatif(req: WhatIfRequest):
        dataset, engine, _, chash = session.context(req.disease)
        pid, year = session.require_record(req.record)
        values = dict(session.cohort.record(pid, year).values)
        model_features = {m.name: m for m in dataset.space.metas}
        for name, value in req.overrides.items():
            meta = model_features.get(name)
            if meta is None:
                raise HTTPException(404, f"unknown model feature {name!r}")
            if meta.kind == CATEGORICAL:
                if value not in meta.levels:
                    raise HTTPException(422, f"unknown level {value!r} for {name!r}")
                values[name] = value
            else:
                try:
                    values[name] = float(value)
                except (TypeError, ValueError):
                    raise HTTPException(422, f"feature {name!r} needs a numeric value")
        key = {
            "op": "whatif",
            "record": req.record,
            "disease": req.disease,
            "overrides": {k: req.overrides[k] for k in sorted(req.overrides)},
            "config": chash,
        }

        def compute():
            x, _ = dataset.space.encode_row(values)
            prob = float(engine.model.predict_proba(x[None, :])[0])
            return {
                "record_id": req.record,
                "disease": req.disease,
                "probability": prob,
                "onset": prob >= engine.model.threshold,
                "threshold": engine.model.threshold,
            }

        return _json_response(session.cached(key, compute))

    @app.get("/records/{rid}/timeline")
    def timeline(rid: str, disease: str, var_x: str, var_y: str):
        dataset, engine, _, chash = session.context(disease)
        pid, _ = session.require_record(rid)
        series = session.cohort.by_participant()[pid]
        key = {
            "op": "timeline",
            "record": rid,
            "disease": disease,
            "pair": [var_x, var_y],
            "config": chash,
        }

        def compute():
            diagrams = []
            trail = []
            for rec in series:
                vx, vy = rec.get(var_x), rec.get(var_y)
                if vx is None or vy is None:
                    continue
                trail.append({"year": rec.year, "x": float(vx), "y": float(vy)})
                x0, miss0 = dataset.space.encode_row(rec.values)
                year_rid = record_id(pid, rec.year)
                d = engine.diagram_full(x0, miss0, year_rid, var_x, var_y)
                diagrams.append(diagram_to_json(d))
            if not diagrams:
                raise HTTPException(
                    422, f"({var_x}, {var_y}) is never jointly observed for {pid!r}"
                )
            return {
                "participant_id": pid,
                "disease": disease,
                "var_x": var_x,
                "var_y": var_y,
                "years": [d["record_id"].rpartition("@")[2] for d in diagrams],
                "diagrams": diagrams,
                "trail": trail,
            }

        return _json_response(session.cached(key, compute))

    @app.get("/analysis/contribution")
    def contribution(disease: str, limit: int = 12):
        if limit < 2:
            raise HTTPException(422, "limit must be at least 2")
        dataset, engine, _, chash = session.context(disease)
        key = {"op": "contribution", "disease": disease, "limit": limit, "config": chash}

        def compute():
            rows = dataset.rows_in(TEST)
            ordered = sorted(range(len(rows)), key=lambda i: dataset.keys[rows[i]])
            chosen = [int(rows[i]) for i in ordered[:limit]]
            if len(chosen) < 2:
                raise HTTPException(422, "need at least 2 test records to cluster")
            features = [m.name for m in dataset.space.metas]
            ids = []
            matrix = []
            for r in chosen:
                pid, year = dataset.keys[r]
                diagrams = engine.batch_diagrams(
                    dataset.X[r], dataset.miss[r], record_id(pid, year)
                )
                contrib = feature_contribution(diagrams, features)
                ids.append(record_id(pid, year))
                matrix.append([contrib[f] for f in features])
            merges, order = ward_cluster(np.array(matrix))
            return {
                "disease": disease,
                "features": features,
                "records": ids,
                "matrix": matrix,
                "leaf_order": order,
                "merges": [[a, b, h, s] for a, b, h, s in merges],
            }

        return _json_response(session.cached(key, compute))

    return app


def run_service(workspace_path: str, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(workspace_path), host=host, port=port, log_level="warning")
