"""Pipeline configuration: one JSON document, defaults below, environment
overrides via ``SINGERID_<SECTION>__<KEY>`` (e.g. ``SINGERID_CV__FOLDS=5``,
``SINGERID_SAMPLE_RATE=8000``)."""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .eval import MODEL_VARIANTS, CvPlan
from .exceptions import ConfigError
from .rpca import RpcaConfig
from .wavelet import WaveletSpec

__all__ = ["DEFAULTS", "ENV_PREFIX", "PipelineConfig", "load_config", "apply_env_overrides"]

ENV_PREFIX = "SINGERID_"

DEFAULTS = {
    "manifest": "manifest.csv",
    "output_dir": "run",
    "sample_rate": 4160,
    "segment_seconds": 12.0,
    "separate": True,
    "stft": {"window_len": 1024, "hop": 256},
    "rpca": {"lam": None, "mu0": None, "rho": 1.6, "tol": 1e-7, "max_iter": 500},
    "wavelet": {"family": "db4", "levels": 4, "extension": "symmetric", "k": 0.3, "mode": "soft"},
    "features": {"variant": "dwt", "n_mfcc": 13},
    "cv": {
        "folds": 10,
        "repeats": 15,
        "seed": 0,
        "model": "svm-linear",
        "stratified": False,
        "variance_retained": 0.9999,
        "C": 1.0,
        "gamma": None,
        "degree": 3,
        "slope": 1.0,
        "coef0": 1.0,
        "n_components": 8,
    },
    "workers": 1,
}

FEATURE_VARIANTS = ("dwt", "mfcc", "raw")


def _merge(base, override, where=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where}{key!r} must be a mapping")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def _parse_env_value(raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_env_overrides(doc: dict, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    doc = copy.deepcopy(doc)
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX) or name[len(ENV_PREFIX):] in ("", "CONFIG"):
            continue
        path = name[len(ENV_PREFIX):].split("__")
        node = doc
        for i, part in enumerate(path):
            # keys match case-insensitively so SINGERID_CV__C reaches cv.C
            key = next((k for k in node if k.lower() == part.lower()), None)
            if key is None:
                raise ConfigError(f"{name}: unknown config key {'.'.join(path).lower()!r}")
            if i == len(path) - 1:
                node[key] = _parse_env_value(raw)
            elif not isinstance(node[key], dict):
                raise ConfigError(f"{name}: {key!r} is not a config section")
            else:
                node = node[key]
    return doc


@dataclass
class PipelineConfig:
    doc: dict
    base_dir: Path

    @property
    def manifest(self) -> Path:
        return (self.base_dir / self.doc["manifest"]).resolve()

    @property
    def output_dir(self) -> Path:
        return (self.base_dir / self.doc["output_dir"]).resolve()

    @property
    def sample_rate(self) -> int:
        return int(self.doc["sample_rate"])

    @property
    def segment_seconds(self) -> float:
        return float(self.doc["segment_seconds"])

    @property
    def variant(self) -> str:
        return self.doc["features"]["variant"]

    @property
    def rpca(self) -> RpcaConfig:
        return RpcaConfig(**self.doc["rpca"])

    @property
    def wavelet(self) -> WaveletSpec:
        w = self.doc["wavelet"]
        return WaveletSpec(w["family"], w["levels"], w["extension"])

    @property
    def cv_plan(self) -> CvPlan:
        return CvPlan(features=self.variant, **self.doc["cv"])

    def section(self, name):
        return copy.deepcopy(self.doc[name])

    def validate(self, check_paths=True):
        d = self.doc
        try:
            if self.sample_rate <= 0:
                raise ValueError("sample_rate must be positive")
            if self.segment_seconds <= 0:
                raise ValueError("segment_seconds must be positive")
            win, hop = int(d["stft"]["window_len"]), int(d["stft"]["hop"])
            if win < 2 or win & (win - 1) or not 0 < hop <= win:
                raise ValueError("stft needs a power-of-two window_len and 0 < hop <= window_len")
            self.rpca
            self.wavelet
            k = float(d["wavelet"]["k"])
            if not 0.0 <= k <= 1.0:
                raise ValueError(f"wavelet.k must lie in [0, 1], got {k}")
            if d["wavelet"]["mode"] not in ("soft", "hard"):
                raise ValueError("wavelet.mode must be 'soft' or 'hard'")
            if self.variant not in FEATURE_VARIANTS:
                raise ValueError(f"features.variant must be one of {FEATURE_VARIANTS}")
            if d["cv"]["model"] not in MODEL_VARIANTS:
                raise ValueError(f"cv.model must be one of {MODEL_VARIANTS}")
            self.cv_plan
            if int(d["workers"]) < 1:
                raise ValueError("workers must be >= 1")
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        if check_paths and not self.manifest.is_file():
            raise ConfigError(f"manifest not found: {self.manifest}")
        return self


def load_config(path=None, overrides=None, environ=None, check_paths=True) -> PipelineConfig:
    """Defaults <- JSON file <- ``overrides`` mapping <- environment."""
    doc = copy.deepcopy(DEFAULTS)
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            user = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        doc = _merge(doc, user)
        base_dir = path.resolve().parent
    if overrides:
        doc = _merge(doc, overrides)
    doc = apply_env_overrides(doc, environ)
    return PipelineConfig(doc, base_dir).validate(check_paths)
