"""Model file round trips and validation."""

import numpy as np
import pytest

from hdpd.gbdt import TrainConfig, train_gbdt
from hdpd.model_io import (
    FORMAT_VERSION,
    FittedModel,
    ModelFormatError,
    load_model,
    model_from_json,
    model_to_json,
    save_model,
)


@pytest.fixture(scope="module")
def trained():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(400, 5))
    y = ((X[:, 0] - 0.5 * X[:, 3]) > 0).astype(float)
    X[rng.random(X.shape) < 0.05] = np.nan
    return train_gbdt(
        X, y, TrainConfig(rounds=40, max_depth=3), feature_names=list("abcde")
    )


def test_round_trip_bit_identical_on_random_inputs(tmp_path, trained):
    path = tmp_path / "m.json"
    save_model(trained, path)
    back = load_model(path)
    rng = np.random.default_rng(8)
    X = rng.normal(size=(1000, 5)) * 3.0
    X[rng.random(X.shape) < 0.1] = np.nan
    assert np.array_equal(trained.predict_proba(X), back.predict_proba(X))
    assert back.features == trained.features


def test_fitted_round_trip_keeps_threshold_and_importances(tmp_path, trained):
    fitted = FittedModel(trained, 0.37, trained.feature_importance())
    path = tmp_path / "m.json"
    save_model(fitted, path)
    back = load_model(path)
    assert isinstance(back, FittedModel)
    assert back.threshold == 0.37
    assert back.importances == fitted.importances
    X = np.random.default_rng(1).normal(size=(50, 5))
    assert np.array_equal(back.predict_proba(X), fitted.predict_proba(X))


def test_plain_ensemble_loads_without_threshold(tmp_path, trained):
    path = tmp_path / "m.json"
    save_model(trained, path)
    assert not isinstance(load_model(path), FittedModel)


def test_hand_written_stump():
    payload = {
        "version": FORMAT_VERSION,
        "base_score": 0.0,
        "features": ["x"],
        "trees": [
            [
                {"feature": 0, "threshold": 1.5, "missing_left": True,
                 "left": 1, "right": 2},
                {"leaf": -2.0},
                {"leaf": 2.0},
            ]
        ],
    }
    model = model_from_json(payload)
    probs = model.predict_proba(np.array([[1.0], [2.0], [np.nan]]))
    sigmoid = lambda m: 1.0 / (1.0 + np.exp(-m))
    assert probs[0] == pytest.approx(sigmoid(-2.0))
    assert probs[1] == pytest.approx(sigmoid(2.0))
    assert probs[2] == pytest.approx(sigmoid(-2.0))  # missing routes left


def test_truncated_file_is_an_error(tmp_path, trained):
    path = tmp_path / "m.json"
    save_model(trained, path)
    data = path.read_text()
    path.write_text(data[: len(data) // 2])
    with pytest.raises(ModelFormatError, match="not a valid model file"):
        load_model(path)


def test_version_mismatch_is_an_explicit_error():
    with pytest.raises(ModelFormatError, match="version"):
        model_from_json({"version": 99, "base_score": 0.0, "features": [], "trees": []})


@pytest.mark.parametrize(
    "mutate,msg",
    [
        (lambda p: p["trees"][0][0].update(feature=7), "out of range"),
        (lambda p: p["trees"][0][0].update(left=0), "follow their parent"),
        (lambda p: p["trees"][0][0].update(threshold="hi"), "finite number"),
        (lambda p: p.update(features="x"), "list of names"),
        (lambda p: p["trees"][0].clear(), "non-empty"),
    ],
)
def test_malformed_payloads_rejected(trained, mutate, msg):
    payload = model_to_json(trained)
    mutate(payload)
    with pytest.raises(ModelFormatError, match=msg):
        model_from_json(payload)


def test_nan_threshold_rejected(trained):
    payload = model_to_json(trained)
    # json round trip would also refuse NaN; guard the direct path too
    payload["base_score"] = float("nan")
    with pytest.raises(ModelFormatError, match="finite"):
        model_from_json(payload)
