"""k-means initialisation, diagonal-covariance GMMs fitted by EM, and a
per-class GMM bank classifier."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = [
    "GmmModel",
    "GmmBank",
    "kmeans",
    "gmm_fit",
    "gmm_log_likelihood",
    "gmm_responsibilities",
    "gmm_bank_predict",
    "GaussianMixtureDiag",
    "GmmClassifier",
]

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    reg_covar: float = 1e-6
    n_iter: int = 0
    converged: bool = False
    log_likelihood_history: list = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return self.weights.size


@dataclass
class GmmBank:
    models: list
    class_names: list


def kmeans(X, K: int, seed: int = 0, max_iter: int = 300) -> np.ndarray:
    """k-means++ seeding followed by Lloyd iterations until no assignment
    changes (or ``max_iter``). Returns the (K, d) centers."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if K > n:
        raise ValueError(f"K={K} exceeds the number of rows ({n})")
    rng = np.random.default_rng(seed)
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(1)
    for c in range(1, K):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[c] = X[idx]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(1))

    assign = None
    for _ in range(max_iter):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(2)
        new = np.argmin(dist, axis=1)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for c in range(K):
            members = assign == c
            if np.any(members):
                centers[c] = X[members].mean(0)
            else:
                # empty cluster: move it to the point worst served by its center
                far = np.argmax(dist[np.arange(n), assign])
                centers[c] = X[far]
                assign[far] = c
    return centers


def _log_gauss(X, means, variances):
    # (n, K) log densities of diagonal Gaussians
    prec = 1.0 / variances
    quad = ((X[:, None, :] - means[None, :, :]) ** 2 * prec[None, :, :]).sum(2)
    return -0.5 * (X.shape[1] * _LOG_2PI + np.log(variances).sum(1)[None, :] + quad)


def _weighted_log_prob(model, X):
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    return _log_gauss(X, model.means, model.variances) + log_w[None, :]


def _m_step(X, resp, reg_covar):
    nk = resp.sum(0) + 10 * np.finfo(np.float64).eps
    weights = nk / nk.sum()
    means = (resp.T @ X) / nk[:, None]
    variances = np.einsum("nk,nkd->kd", resp, (X[:, None, :] - means[None, :, :]) ** 2) / nk[:, None]
    return weights, means, np.maximum(variances, reg_covar)


def gmm_fit(X, K: int = 8, seed: int = 0, tol: float = 1e-6, max_iter: int = 200,
            reg_covar: float = 1e-6) -> GmmModel:
    """Fit a diagonal GMM by EM from a k-means start.

    E-step: membership weights by Bayes' rule (computed in log space).
    M-step: weights ``N_k / N``, membership-weighted means and diagonal
    variances, the latter floored at ``reg_covar``. Stops when the mean
    per-sample log-likelihood improves by less than ``tol``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"X must be 2-D with at least one feature, got shape {X.shape}")
    n = X.shape[0]
    if K < 1 or K >= n:
        raise ValueError(f"need 1 <= K < rows, got K={K} with {n} rows")
    if np.all(X == X[0]):
        raise ValueError("all rows are identical; the density is degenerate")

    centers = kmeans(X, K, seed)
    dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(2)
    resp = np.zeros((n, K))
    resp[np.arange(n), np.argmin(dist, axis=1)] = 1.0
    model = GmmModel(*_m_step(X, resp, reg_covar), reg_covar=reg_covar)

    history = []
    prev = -np.inf
    for it in range(1, max_iter + 1):
        wlp = _weighted_log_prob(model, X)
        log_norm = logsumexp(wlp, axis=1)
        total = float(log_norm.sum())
        history.append(total)
        resp = np.exp(wlp - log_norm[:, None])
        model.weights, model.means, model.variances = _m_step(X, resp, reg_covar)
        model.n_iter = it
        mean_ll = total / n
        if mean_ll - prev < tol:
            model.converged = True
            break
        prev = mean_ll
    history.append(float(logsumexp(_weighted_log_prob(model, X), axis=1).sum()))
    model.log_likelihood_history = history
    return model


def gmm_log_likelihood(model: GmmModel, x):
    """``log sum_k w_k N(x | mu_k, diag(var_k))`` for a vector or each row."""
    x = np.asarray(x, dtype=np.float64)
    X = np.atleast_2d(x)
    if X.shape[1] != model.means.shape[1]:
        raise ValueError(f"expected {model.means.shape[1]} features, got {X.shape[1]}")
    ll = logsumexp(_weighted_log_prob(model, X), axis=1)
    return float(ll[0]) if x.ndim == 1 else ll


def gmm_responsibilities(model: GmmModel, X) -> np.ndarray:
    wlp = _weighted_log_prob(model, np.atleast_2d(np.asarray(X, dtype=np.float64)))
    return np.exp(wlp - logsumexp(wlp, axis=1)[:, None])


def gmm_bank_predict(bank: GmmBank, x):
    """Class whose model gives the highest log-likelihood; ties to the lowest index."""
    x = np.asarray(x, dtype=np.float64)
    scores = np.column_stack([np.atleast_1d(gmm_log_likelihood(m, np.atleast_2d(x))) for m in bank.models])
    idx = np.argmax(scores, axis=1)
    if x.ndim == 1:
        return bank.class_names[int(idx[0])]
    return [bank.class_names[i] for i in idx]


class GaussianMixtureDiag(BaseEstimator):
    def __init__(self, n_components=8, tol=1e-6, max_iter=200, reg_covar=1e-6, random_state=0):
        self.n_components = n_components
        self.tol = tol
        self.max_iter = max_iter
        self.reg_covar = reg_covar
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.model_ = gmm_fit(X, self.n_components, self.random_state, self.tol, self.max_iter, self.reg_covar)
        self.weights_ = self.model_.weights
        self.means_ = self.model_.means
        self.variances_ = self.model_.variances
        self.n_features_in_ = X.shape[1]
        return self

    def score_samples(self, X):
        check_is_fitted(self, "model_")
        return gmm_log_likelihood(self.model_, check_array(X, dtype=np.float64))

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return gmm_responsibilities(self.model_, check_array(X, dtype=np.float64))


class GmmClassifier(ClassifierMixin, BaseEstimator):
    """One diagonal GMM per class; predicts the maximum-likelihood class."""

    def __init__(self, n_components=8, tol=1e-6, max_iter=200, reg_covar=1e-6, random_state=0):
        self.n_components = n_components
        self.tol = tol
        self.max_iter = max_iter
        self.reg_covar = reg_covar
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        if self.classes_.size < 2:
            raise ValueError("GmmClassifier needs at least 2 classes")
        models = [
            gmm_fit(X[y == c], self.n_components, self.random_state, self.tol, self.max_iter, self.reg_covar)
            for c in self.classes_
        ]
        self.bank_ = GmmBank(models, list(self.classes_))
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "bank_")
        X = check_array(X, dtype=np.float64)
        return np.column_stack([gmm_log_likelihood(m, X) for m in self.bank_.models])

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]
