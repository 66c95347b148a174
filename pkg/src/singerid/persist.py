"""JSON model files: standardization, PCA and classifier in one document."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler

from .classify import BinarySvmModel, GmmBank, GmmClassifier, GmmModel, KernelSpec, OneVsAllSVC, OvaSvmModel
from .features import PcaModel, VariancePCA

__all__ = ["FORMAT", "VERSION", "pipeline_to_dict", "pipeline_from_dict", "save_model", "load_model"]

FORMAT = "singerid.model"
VERSION = 1

BIAS_CONVENTION = (
    "decision(x) = sum_i dual_coefficients[i] * k(support_vectors[i], x) + bias; "
    "for the hyperplane w.x - b, b = -bias"
)


def _arr(a):
    return np.asarray(a, dtype=np.float64).tolist()


def _svm_to_dict(m: BinarySvmModel) -> dict:
    return {
        "kernel": m.kernel.to_dict(),
        "C": m.C,
        "bias": m.bias,
        "support_vectors": _arr(m.support_vectors),
        "dual_coefficients": _arr(m.dual_coefficients),
    }


def _svm_from_dict(d) -> BinarySvmModel:
    return BinarySvmModel(
        np.array(d["support_vectors"], dtype=np.float64),
        np.array(d["dual_coefficients"], dtype=np.float64),
        float(d["bias"]),
        KernelSpec(**d["kernel"]),
        float(d["C"]),
    )


def _classifier_to_dict(clf) -> dict:
    if isinstance(clf, OneVsAllSVC):
        return {
            "type": "ova-svm",
            "bias_convention": BIAS_CONVENTION,
            "params": clf.get_params(),
            "models": [_svm_to_dict(m) for m in clf.model_.models],
        }
    if isinstance(clf, GmmClassifier):
        return {
            "type": "gmm-bank",
            "params": clf.get_params(),
            "models": [
                {"weights": _arr(m.weights), "means": _arr(m.means),
                 "variances": _arr(m.variances), "reg_covar": m.reg_covar}
                for m in clf.bank_.models
            ],
        }
    raise TypeError(f"cannot serialize classifier of type {type(clf).__name__}")


def pipeline_to_dict(pipe: Pipeline, feature_names=None, extra=None) -> dict:
    """Serialize a fitted ``scale -> pca -> clf`` pipeline."""
    scaler, pca, clf = pipe.named_steps["scale"], pipe.named_steps["pca"], pipe.named_steps["clf"]
    return {
        "format": FORMAT,
        "version": VERSION,
        "feature_names": list(feature_names) if feature_names is not None else None,
        "class_names": [str(c) for c in clf.classes_],
        "scaler": {"mean": _arr(scaler.mean_), "scale": _arr(scaler.scale_)},
        "pca": {
            "variance_retained": pca.variance_retained,
            "mean": _arr(pca.model_.mean),
            "components": _arr(pca.model_.components),
            "explained_variance_ratios": _arr(pca.model_.explained_variance_ratios),
            "retained_count": pca.model_.retained_count,
        },
        "classifier": _classifier_to_dict(clf),
        "extra": extra or {},
    }


def pipeline_from_dict(doc: dict) -> Pipeline:
    if doc.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    classes = np.array(doc["class_names"], dtype=object)

    scaler = StandardScaler()
    scaler.mean_ = np.array(doc["scaler"]["mean"])
    scaler.scale_ = np.array(doc["scaler"]["scale"])
    scaler.var_ = scaler.scale_ ** 2
    scaler.n_features_in_ = scaler.mean_.size
    scaler.n_samples_seen_ = 0

    p = doc["pca"]
    pca = VariancePCA(p["variance_retained"])
    pca.model_ = PcaModel(np.array(p["mean"]), np.array(p["components"]).reshape(len(p["mean"]), -1),
                          np.array(p["explained_variance_ratios"]), int(p["retained_count"]))
    pca.mean_ = pca.model_.mean
    pca.components_ = pca.model_.components.T
    pca.explained_variance_ratio_ = pca.model_.explained_variance_ratios
    pca.n_components_ = pca.model_.retained_count
    pca.n_features_in_ = pca.mean_.size

    c = doc["classifier"]
    if c["type"] == "ova-svm":
        clf = OneVsAllSVC(**c["params"])
        clf.model_ = OvaSvmModel([_svm_from_dict(m) for m in c["models"]], list(classes))
    elif c["type"] == "gmm-bank":
        clf = GmmClassifier(**c["params"])
        clf.bank_ = GmmBank(
            [GmmModel(np.array(m["weights"]), np.array(m["means"]), np.array(m["variances"]), m["reg_covar"])
             for m in c["models"]],
            list(classes),
        )
    else:
        raise ValueError(f"unknown classifier type {c['type']!r}")
    clf.classes_ = classes
    clf.n_features_in_ = pca.n_components_
    return Pipeline([("scale", scaler), ("pca", pca), ("clf", clf)])


def save_model(path, pipe: Pipeline, feature_names=None, extra=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(pipeline_to_dict(pipe, feature_names, extra), indent=1), encoding="utf-8")
    return path


def load_model(path):
    """Return ``(pipeline, document)`` from a model file."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return pipeline_from_dict(doc), doc
