"""Soft-margin kernel SVM trained by SMO, and one-against-all multiclass."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import ConvergenceError
from .kernels import KernelSpec, kernel_matrix

__all__ = [
    "BinarySvmModel",
    "OvaSvmModel",
    "smo_solve",
    "svm_train_binary",
    "svm_decision",
    "ova_train",
    "ova_predict",
    "BinarySVC",
    "OneVsAllSVC",
]

logger = logging.getLogger(__name__)

_TAU = 1e-12


@dataclass
class BinarySvmModel:
    """Trained binary SVM.

    ``decision(x) = sum(dual_coefficients * k(support_vectors, x)) + bias``
    where ``dual_coefficients = alpha * y``. The hyperplane written as
    ``w.x - b`` has ``b = -bias``.
    """

    support_vectors: np.ndarray
    dual_coefficients: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float
    n_iter: int = 0


@dataclass
class OvaSvmModel:
    models: list
    class_names: list


def smo_solve(K, y, C, tol=1e-3, max_iter=200_000):
    """Solve ``min 1/2 a'Qa - sum(a)`` s.t. ``0 <= a <= C``, ``y'a = 0``
    with ``Q = yy' * K``.

    Pairwise SMO using the maximal-violating ``i`` and a second-order
    choice of ``j``. Stops when the KKT gap ``m(a) - M(a)`` drops below
    ``tol``. Returns ``(alpha, bias, n_iter)`` with the decision function
    ``sum(alpha * y * K[:, x]) + bias``.
    """
    n = y.size
    y = y.astype(np.float64)
    Q = (y[:, None] * y[None, :]) * K
    diagK = np.diag(K).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    gap = np.inf
    while True:
        minus_yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        up_scores = np.where(up, minus_yG, -np.inf)
        low_scores = np.where(low, minus_yG, np.inf)
        i = int(np.argmax(up_scores))
        m = up_scores[i]
        M = low_scores.min()
        if not (np.isfinite(m) and np.isfinite(M)):
            gap = 0.0
            break
        gap = m - M
        if gap < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} iterations (KKT gap {gap:.3g})",
                {"iterations": it, "gap": float(gap), "n_samples": n, "C": C},
            )
        b = m - minus_yG
        a = diagK[i] + diagK - 2.0 * K[i]
        a = np.where(a > 0, a, _TAU)
        j = int(np.argmin(np.where(low_scores < m, -(b * b) / a, np.inf)))

        ai_old, aj_old = alpha[i], alpha[j]
        quad = diagK[i] + diagK[j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = _TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
        G += Q[:, i] * (alpha[i] - ai_old) + Q[:, j] * (alpha[j] - aj_old)
        it += 1

    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        rho = yG[free].mean()
    else:
        ub, lb = np.inf, -np.inf
        for t in range(n):
            if (alpha[t] >= C and y[t] < 0) or (alpha[t] <= 0 and y[t] > 0):
                ub = min(ub, yG[t])
            else:
                lb = max(lb, yG[t])
        rho = (ub + lb) / 2.0
    return alpha, -float(rho), it


def svm_train_binary(X, y, kernel: KernelSpec = KernelSpec(), C: float = 1.0,
                     tol: float = 1e-3, max_iter: int = 200_000) -> BinarySvmModel:
    """Train on labels in {-1, +1}."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError(f"X shape {X.shape} does not match {y.size} labels")
    if not set(np.unique(y)) <= {-1, 1}:
        raise ValueError("labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise ValueError("both classes (-1 and +1) must be present")
    if not C > 0:
        raise ValueError(f"C must be > 0, got {C}")
    kernel = kernel.resolved(X)
    K = kernel_matrix(kernel, X, X)
    alpha, bias, it = smo_solve(K, y, C, tol, max_iter)
    sv = alpha > 0
    return BinarySvmModel(X[sv].copy(), (alpha * y)[sv], bias, kernel, float(C), it)


def svm_decision(model: BinarySvmModel, x) -> np.ndarray | float:
    """Pre-sign decision value(s) for one vector or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != model.support_vectors.shape[1]:
        raise ValueError(
            f"expected {model.support_vectors.shape[1]} features, got {X.shape[1]}"
        )
    out = kernel_matrix(model.kernel, X, model.support_vectors) @ model.dual_coefficients + model.bias
    return float(out[0]) if single else out


def ova_train(X, labels, class_names=None, kernel: KernelSpec = KernelSpec(), C: float = 1.0,
              tol: float = 1e-3, max_iter: int = 200_000) -> OvaSvmModel:
    """One binary SVM per class: that class +1, all others -1."""
    labels = np.asarray(labels)
    if class_names is None:
        class_names = sorted(set(labels.tolist()))
    class_names = list(class_names)
    if len(class_names) < 2:
        raise ValueError("one-against-all needs at least 2 classes")
    models = []
    for c in class_names:
        pos = labels == c
        if not np.any(pos):
            raise ValueError(f"class {c!r} has no training samples")
        if np.all(pos):
            raise ValueError(f"class {c!r} is the only class present")
        models.append(svm_train_binary(X, np.where(pos, 1, -1), kernel, C, tol, max_iter))
    return OvaSvmModel(models, class_names)


def _ova_scores(model: OvaSvmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.column_stack([svm_decision(m, X) for m in model.models])


def ova_predict(model: OvaSvmModel, x):
    """Class with the largest decision value; ties go to the lowest index."""
    scores = _ova_scores(model, x)
    idx = np.argmax(scores, axis=1)
    if np.asarray(x).ndim == 1:
        return model.class_names[int(idx[0])]
    return [model.class_names[i] for i in idx]


class _KernelParams:
    def _kernel_spec(self):
        kind = {"poly": "polynomial"}.get(self.kernel, self.kernel)
        gamma = None if self.gamma in (None, "scale") else float(self.gamma)
        return KernelSpec(kind, self.degree, self.slope, self.coef0, gamma)


class BinarySVC(_KernelParams, ClassifierMixin, BaseEstimator):
    """Two-class SVM. The first entry of ``classes_`` maps to -1."""

    def __init__(self, C=1.0, kernel="linear", degree=3, slope=1.0, coef0=1.0, gamma="scale",
                 tol=1e-3, max_iter=200_000):
        self.C = C
        self.kernel = kernel
        self.degree = degree
        self.slope = slope
        self.coef0 = coef0
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        if self.classes_.size != 2:
            raise ValueError(f"BinarySVC needs exactly 2 classes, got {self.classes_.size}")
        signed = np.where(y == self.classes_[1], 1, -1)
        self.model_ = svm_train_binary(X, signed, self._kernel_spec(), self.C, self.tol, self.max_iter)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return svm_decision(self.model_, check_array(X, dtype=np.float64))

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]


class OneVsAllSVC(_KernelParams, ClassifierMixin, BaseEstimator):
    """Multiclass SVM: one binary machine per class, predict the argmax."""

    def __init__(self, C=1.0, kernel="linear", degree=3, slope=1.0, coef0=1.0, gamma="scale",
                 tol=1e-3, max_iter=200_000):
        self.C = C
        self.kernel = kernel
        self.degree = degree
        self.slope = slope
        self.coef0 = coef0
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        self.model_ = ova_train(X, y, list(self.classes_), self._kernel_spec(), self.C, self.tol, self.max_iter)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return _ova_scores(self.model_, check_array(X, dtype=np.float64))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]
