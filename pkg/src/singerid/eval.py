"""Repeated shuffled k-fold cross-validation with train-only preprocessing."""
from __future__ import annotations

import csv
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler

from .classify import GmmClassifier, OneVsAllSVC
from .features import Dataset, VariancePCA

__all__ = [
    "MODEL_VARIANTS",
    "FEATURE_VARIANTS",
    "CvPlan",
    "EvalReport",
    "make_classifier",
    "build_pipeline",
    "kfold_split",
    "cross_validate",
    "emit_report",
    "read_report",
]

logger = logging.getLogger(__name__)

MODEL_VARIANTS = ("svm-linear", "svm-poly", "svm-rbf", "gmm")
FEATURE_VARIANTS = ("none", "raw", "mfcc", "dwt")


@dataclass(frozen=True)
class CvPlan:
    folds: int = 10
    repeats: int = 15
    seed: int = 0
    features: str = "dwt"
    model: str = "svm-linear"
    stratified: bool = False
    variance_retained: float = 0.9999
    C: float = 1.0
    gamma: float | None = None
    degree: int = 3
    slope: float = 1.0
    coef0: float = 1.0
    n_components: int = 8

    def __post_init__(self):
        if int(self.folds) < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if int(self.repeats) < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.model not in MODEL_VARIANTS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODEL_VARIANTS}")
        if self.features not in FEATURE_VARIANTS:
            raise ValueError(f"unknown features {self.features!r}; choose from {FEATURE_VARIANTS}")
        if not 0.0 < self.variance_retained <= 1.0:
            raise ValueError(f"variance_retained must lie in (0, 1], got {self.variance_retained}")
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")


@dataclass
class EvalReport:
    """Per-repeat pooled accuracies and fit times.

    ``confusion[i, j]`` counts test rows of class i predicted as class j,
    summed over every repeat. Equality ignores ``train_seconds``: wall-clock
    time is the one field a rerun cannot reproduce.
    """

    accuracies: list
    train_seconds: list
    confusion: np.ndarray
    class_names: list
    plan: CvPlan | None = field(default=None, compare=False)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies))

    def __eq__(self, other):
        if not isinstance(other, EvalReport):
            return NotImplemented
        return (self.accuracies == other.accuracies
                and np.array_equal(self.confusion, other.confusion) and self.class_names == other.class_names)

    def summary(self) -> str:
        return (f"mean accuracy {self.mean_accuracy:.4f} +/- {self.std_accuracy:.4f} "
                f"over {len(self.accuracies)} repeats; fit time {sum(self.train_seconds):.2f} s")


def make_classifier(plan: CvPlan):
    if plan.model == "gmm":
        return GmmClassifier(n_components=plan.n_components, random_state=plan.seed)
    kernel = {"svm-linear": "linear", "svm-poly": "polynomial", "svm-rbf": "rbf"}[plan.model]
    gamma = "scale" if plan.gamma is None else plan.gamma
    return OneVsAllSVC(C=plan.C, kernel=kernel, degree=plan.degree, slope=plan.slope,
                       coef0=plan.coef0, gamma=gamma)


def build_pipeline(plan: CvPlan) -> Pipeline:
    """z-score -> PCA -> classifier; every stage is fit on training rows only."""
    return Pipeline([
        ("scale", StandardScaler()),
        ("pca", VariancePCA(plan.variance_retained)),
        ("clf", make_classifier(plan)),
    ])


def kfold_split(n: int, folds: int, seed: int = 0, labels=None):
    """Seeded shuffle, then contiguous partition into ``folds`` test sets.

    Fold sizes differ by at most one (the first ``n % folds`` folds get the
    extra row). With ``labels`` the split is stratified: each class is
    shuffled and dealt round-robin across folds.
    """
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if folds > n:
        raise ValueError(f"folds ({folds}) exceeds number of rows ({n})")
    rng = np.random.default_rng(seed)
    if labels is None:
        perm = rng.permutation(n)
        sizes = np.full(folds, n // folds)
        sizes[: n % folds] += 1
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        tests = [np.sort(perm[bounds[f]:bounds[f + 1]]) for f in range(folds)]
    else:
        labels = np.asarray(labels)
        buckets = [[] for _ in range(folds)]
        pos = 0
        for c in np.unique(labels):
            members = rng.permutation(np.flatnonzero(labels == c))
            for idx in members:
                buckets[pos % folds].append(idx)
                pos += 1
        tests = [np.sort(np.array(b, dtype=np.intp)) for b in buckets]
    everything = np.arange(n)
    return [(np.setdiff1d(everything, t, assume_unique=True), t) for t in tests]


def _run_fold(make, X, y, train, test):
    model = make()
    t0 = time.perf_counter()
    model.fit(X[train], y[train])
    elapsed = time.perf_counter() - t0
    return np.asarray(model.predict(X[test])), elapsed


def cross_validate(data: Dataset, plan: CvPlan, make_estimator=None, workers: int = 1) -> EvalReport:
    """Run ``plan.repeats`` shuffles of ``plan.folds``-fold CV.

    Repeat ``r`` shuffles with ``plan.seed + r``. Its accuracy is pooled
    (correct / total over all folds) and its time is the summed wall clock
    of the ``fit`` calls. ``make_estimator`` overrides the default
    :func:`build_pipeline`.
    """
    y = data.y
    n_classes = len(data.class_names)
    present = np.unique(y)
    if present.size < 2:
        raise ValueError("cross-validation needs at least 2 classes")
    counts = np.bincount(y, minlength=n_classes)
    if np.any(counts[present] < plan.folds):
        warnings.warn(
            f"some classes have fewer than {plan.folds} rows; folds will miss classes",
            stacklevel=2,
        )
    make = make_estimator or (lambda: build_pipeline(plan))
    X = data.X
    accuracies, seconds = [], []
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for r in range(plan.repeats):
        splits = kfold_split(len(data), plan.folds, plan.seed + r, y if plan.stratified else None)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(lambda s: _run_fold(make, X, y, *s), splits))
        else:
            results = [_run_fold(make, X, y, tr, te) for tr, te in splits]
        correct = 0
        elapsed = 0.0
        for (_, test), (pred, dt) in zip(splits, results):
            np.add.at(confusion, (y[test], pred.astype(np.intp)), 1)
            correct += int(np.sum(pred == y[test]))
            elapsed += dt
        accuracies.append(correct / len(data))
        seconds.append(elapsed)
        logger.info("repeat %d/%d: accuracy %.4f", r + 1, plan.repeats, accuracies[-1])
    return EvalReport(accuracies, seconds, confusion, list(data.class_names), plan)


def _confusion_path(path: Path) -> Path:
    return path.with_name(path.stem + ".confusion.csv")


def emit_report(report: EvalReport, path) -> Path:
    """Write ``repeat,accuracy,train_seconds`` rows plus a confusion sidecar
    ``<stem>.confusion.csv``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["repeat", "accuracy", "train_seconds"])
        for r, (acc, sec) in enumerate(zip(report.accuracies, report.train_seconds)):
            w.writerow([r, repr(float(acc)), repr(float(sec))])
    with _confusion_path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\predicted", *report.class_names])
        for name, row in zip(report.class_names, report.confusion):
            w.writerow([name, *(int(v) for v in row)])
    return path


def read_report(path) -> EvalReport:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    with _confusion_path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        conf_rows = [r for r in reader if r]
    confusion = np.array([[int(v) for v in r[1:]] for r in conf_rows], dtype=np.int64)
    return EvalReport(
        [float(r["accuracy"]) for r in rows],
        [float(r["train_seconds"]) for r in rows],
        confusion.reshape(len(conf_rows), len(header) - 1),
        header[1:],
    )


def plan_to_dict(plan: CvPlan) -> dict:
    return asdict(plan)
