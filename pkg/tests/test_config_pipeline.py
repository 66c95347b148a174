import json

import numpy as np
import pytest

from singerid.config import DEFAULTS, load_config
from singerid.datasets import write_singer_corpus
from singerid.exceptions import ConfigError, StageError
from singerid.pipeline import extract_manifest, read_manifest, run_pipeline, write_manifest


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return write_singer_corpus(tmp_path_factory.mktemp("corpus"), n_per_singer=3, duration=4.0, seed=3)


def _config(tmp_path, manifest, **over):
    doc = {
        "manifest": str(manifest),
        "output_dir": str(tmp_path / "run"),
        "segment_seconds": 4.0,
        "cv": {"folds": 3, "repeats": 2},
    }
    for key, val in over.items():
        if isinstance(val, dict):
            doc.setdefault(key, {}).update(val)
        else:
            doc[key] = val
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


def test_defaults_are_paper_values():
    assert DEFAULTS["sample_rate"] == 4160
    assert DEFAULTS["segment_seconds"] == 12.0
    assert DEFAULTS["wavelet"]["family"] == "db4" and DEFAULTS["wavelet"]["levels"] == 4
    assert (DEFAULTS["cv"]["folds"], DEFAULTS["cv"]["repeats"]) == (10, 15)
    assert DEFAULTS["cv"]["variance_retained"] == 0.9999


def test_layering(tmp_path, corpus):
    path = _config(tmp_path, corpus, wavelet={"k": 0.5})
    cfg = load_config(path, overrides={"cv": {"folds": 4}}, environ={"SINGERID_CV__REPEATS": "7",
                                                                     "SINGERID_WAVELET__MODE": "hard",
                                                                     "SINGERID_CV__C": "2.5"})
    assert cfg.doc["wavelet"]["k"] == 0.5
    assert cfg.cv_plan.folds == 4 and cfg.cv_plan.repeats == 7
    assert cfg.doc["wavelet"]["mode"] == "hard"
    assert cfg.cv_plan.C == 2.5
    with pytest.raises(ConfigError):
        load_config(path, environ={"SINGERID_CV__BOGUS": "1"})
    assert cfg.manifest == corpus.resolve()


@pytest.mark.parametrize("bad", [
    {"cv": {"folds": 1}},
    {"wavelet": {"k": 1.5}},
    {"stft": {"window_len": 1000}},
    {"cv": {"model": "knn"}},
    {"workers": 0},
])
def test_validation_rejects(tmp_path, corpus, bad):
    with pytest.raises(ConfigError):
        load_config(_config(tmp_path, corpus, **bad))


def test_missing_manifest_and_bad_json(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_config(tmp_path, tmp_path / "nope.csv"))
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_manifest_roundtrip(tmp_path):
    wav = tmp_path / "a.wav"
    wav.touch()
    m = write_manifest(tmp_path / "m.csv", [(wav, "alto")])
    assert m.read_text() == "path,label\na.wav,alto\n"
    assert read_manifest(m) == [(wav.resolve(), "alto")]


def test_extract_skips_missing(tmp_path, corpus):
    entries = read_manifest(corpus)[:2] + [(tmp_path / "gone.wav", "bass")]
    with pytest.warns(UserWarning):
        data, skipped = extract_manifest(entries, "dwt", segment_seconds=4.0)
    assert len(skipped) == 1 and len(data) == 2
    assert data.X.shape[1] == 18


def test_pipeline_caching(tmp_path, corpus):
    path = _config(tmp_path, corpus)
    first = run_pipeline(load_config(path))
    assert first.stages == {"separate": "computed", "denoise": "computed", "extract": "computed",
                            "evaluate": "computed"}
    features = first.features_path.read_bytes()
    second = run_pipeline(load_config(path))
    assert set(second.stages.values()) == {"cached"}
    assert second.report == first.report
    assert second.features_path.read_bytes() == features
    assert len(features.splitlines()) == 13

    path = _config(tmp_path, corpus, wavelet={"k": 0.6})
    third = run_pipeline(load_config(path))
    assert third.stages == {"separate": "cached", "denoise": "computed", "extract": "computed",
                            "evaluate": "computed"}

    path = _config(tmp_path, corpus, wavelet={"k": 0.6}, cv={"folds": 2})
    fourth = run_pipeline(load_config(path))
    assert fourth.stages == {"separate": "cached", "denoise": "cached", "extract": "cached",
                             "evaluate": "computed"}


def test_pipeline_mfcc_skips_denoise(tmp_path, corpus):
    res = run_pipeline(load_config(_config(tmp_path, corpus, features={"variant": "mfcc"}, separate=False)))
    assert res.stages["denoise"] == "skipped"
    assert res.report.confusion.sum() == 12 * 2


def test_stage_failure_names_stage(tmp_path, corpus):
    # 12 segments cannot fill 20 folds
    path = _config(tmp_path, corpus, cv={"folds": 20})
    with pytest.raises(StageError, match="evaluate"):
        run_pipeline(load_config(path))
