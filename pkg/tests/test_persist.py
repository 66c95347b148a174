import json

import numpy as np
import pytest

from singerid.eval import CvPlan, build_pipeline
from singerid.persist import FORMAT, VERSION, load_model, save_model


@pytest.mark.parametrize("model", ["svm-linear", "svm-poly", "svm-rbf", "gmm"])
def test_roundtrip_predictions(tmp_path, rng, model):
    X = np.vstack([rng.normal(c, 1.0, (30, 3)) for c in ([0, 0, 0], [5, 0, 0], [0, 5, 0])])
    y = np.repeat(np.array(["alto", "bass", "tenor"], dtype=object), 30)
    pipe = build_pipeline(CvPlan(model=model, n_components=2)).fit(X, y)
    path = save_model(tmp_path / "m.json", pipe, ["a", "b", "c"], {"note": 1})
    loaded, doc = load_model(path)
    assert doc["format"] == FORMAT and doc["version"] == VERSION
    assert doc["feature_names"] == ["a", "b", "c"]
    probe = rng.normal(2, 3, (40, 3))
    assert list(loaded.predict(probe)) == list(pipe.predict(probe))
    np.testing.assert_allclose(loaded.decision_function(probe), pipe.decision_function(probe), rtol=1e-12, atol=1e-12)


def test_svm_file_documents_bias_sign(tmp_path, rng):
    X = rng.standard_normal((20, 2))
    y = np.where(X[:, 0] > 0, "p", "n")
    path = save_model(tmp_path / "m.json", build_pipeline(CvPlan()).fit(X, y))
    doc = json.loads(path.read_text())
    assert "bias" in doc["classifier"]["bias_convention"]
