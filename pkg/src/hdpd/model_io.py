"""Portable model files.

A model file is JSON with fields {version, base_score, features[],
trees[]}, where each tree is a list of node records: internal nodes
carry {feature, threshold, missing_left, left, right} (feature is an
index into features[], left/right are node indices) and leaves carry
{leaf}. A fitted model adds {threshold_tau, importances}. Round trips
reproduce bit-identical predictions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gbdt import Ensemble, Tree

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass
class FittedModel:
    ensemble: Ensemble
    threshold: float                 # onset prediction iff probability >= threshold
    importances: dict[str, float]

    @property
    def features(self) -> list[str]:
        return self.ensemble.features

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.ensemble.predict_proba(X)


def _tree_to_nodes(tree: Tree) -> list[dict]:
    nodes = []
    for i in range(len(tree.feature)):
        if tree.feature[i] < 0:
            nodes.append({"leaf": float(tree.value[i])})
        else:
            nodes.append(
                {
                    "feature": int(tree.feature[i]),
                    "threshold": float(tree.threshold[i]),
                    "missing_left": bool(tree.missing_left[i]),
                    "left": int(tree.left[i]),
                    "right": int(tree.right[i]),
                    "gain": float(tree.gain[i]),
                }
            )
    return nodes


def _tree_from_nodes(nodes: list[dict], n_features: int, where: str) -> Tree:
    if not isinstance(nodes, list) or not nodes:
        raise ModelFormatError(f"{where}: tree must be a non-empty node list")
    n = len(nodes)
    feature = np.full(n, -1, dtype=np.int32)
    threshold = np.zeros(n)
    missing_left = np.zeros(n, dtype=bool)
    left = np.full(n, -1, dtype=np.int32)
    right = np.full(n, -1, dtype=np.int32)
    value = np.zeros(n)
    gain = np.zeros(n)
    for i, node in enumerate(nodes):
        if not isinstance(node, dict):
            raise ModelFormatError(f"{where} node {i}: expected an object")
        if "leaf" in node:
            value[i] = _require_number(node, "leaf", f"{where} node {i}")
            continue
        f = _require_int(node, "feature", f"{where} node {i}")
        if not 0 <= f < n_features:
            raise ModelFormatError(f"{where} node {i}: feature index {f} out of range")
        l = _require_int(node, "left", f"{where} node {i}")
        r = _require_int(node, "right", f"{where} node {i}")
        if not (0 <= l < n and 0 <= r < n):
            raise ModelFormatError(f"{where} node {i}: child index out of range")
        if l <= i or r <= i:
            raise ModelFormatError(f"{where} node {i}: children must follow their parent")
        feature[i] = f
        threshold[i] = _require_number(node, "threshold", f"{where} node {i}")
        missing_left[i] = bool(node.get("missing_left", False))
        left[i] = l
        right[i] = r
        gain[i] = float(node.get("gain", 0.0))
    return Tree(feature, threshold, missing_left, left, right, value, gain)


def _require_number(obj: dict, key: str, where: str) -> float:
    v = obj.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ModelFormatError(f"{where}: field {key!r} must be a finite number")
    return float(v)


def _require_int(obj: dict, key: str, where: str) -> int:
    v = obj.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ModelFormatError(f"{where}: field {key!r} must be an integer")
    return v


def model_to_json(model: Ensemble | FittedModel) -> dict:
    fitted = model if isinstance(model, FittedModel) else None
    ensemble = fitted.ensemble if fitted else model
    payload = {
        "version": FORMAT_VERSION,
        "base_score": float(ensemble.base_score),
        "features": list(ensemble.features),
        "trees": [_tree_to_nodes(t) for t in ensemble.trees],
    }
    if fitted is not None:
        payload["threshold_tau"] = float(fitted.threshold)
        payload["importances"] = {k: float(v) for k, v in fitted.importances.items()}
    return payload


def model_from_json(payload: dict) -> Ensemble | FittedModel:
    if not isinstance(payload, dict):
        raise ModelFormatError("model file must contain a JSON object")
    if payload.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {payload.get('version')!r}")
    features = payload.get("features")
    if not isinstance(features, list) or not all(isinstance(f, str) for f in features):
        raise ModelFormatError("field 'features' must be a list of names")
    base = _require_number(payload, "base_score", "model")
    trees = payload.get("trees")
    if not isinstance(trees, list):
        raise ModelFormatError("field 'trees' must be a list")
    ensemble = Ensemble(list(features), base)
    for ti, nodes in enumerate(trees):
        ensemble.trees.append(_tree_from_nodes(nodes, len(features), f"tree {ti}"))
    if "threshold_tau" not in payload:
        return ensemble
    tau = _require_number(payload, "threshold_tau", "model")
    importances = payload.get("importances", {})
    if not isinstance(importances, dict):
        raise ModelFormatError("field 'importances' must be an object")
    return FittedModel(ensemble, tau, {k: float(v) for k, v in importances.items()})


def save_model(model: Ensemble | FittedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model)), encoding="utf-8")


def load_model(path: str | Path) -> Ensemble | FittedModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not a valid model file: {exc}") from exc
    return model_from_json(payload)
