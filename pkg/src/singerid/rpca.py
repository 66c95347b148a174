"""Robust PCA (low-rank + sparse) by inexact augmented Lagrange multipliers.

Applied to a magnitude spectrogram, the low-rank part tracks the slowly
varying accompaniment and the sparse part the singing voice.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .audio_io import AudioClip
from .spectral import Spectrogram, istft, stft

__all__ = [
    "RpcaConfig",
    "RpcaDecomposition",
    "soft_threshold",
    "singular_value_threshold",
    "rpca_alm",
    "separate_voice",
    "RobustPCA",
    "VoiceSeparator",
]

logger = logging.getLogger(__name__)

# Penalty growth stops at this multiple of the initial penalty.
_MU_MAX_FACTOR = 1e7


@dataclass(frozen=True)
class RpcaConfig:
    """Solver settings. ``lam=None`` and ``mu0=None`` pick data-dependent defaults
    (``1/sqrt(max(n, p))`` and ``1.25/||V||_2``)."""

    lam: float | None = None
    mu0: float | None = None
    rho: float = 1.6
    tol: float = 1e-7
    max_iter: int = 500

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.mu0 is not None and not self.mu0 > 0:
            raise ValueError(f"mu0 must be > 0, got {self.mu0}")
        if not self.rho > 1:
            raise ValueError(f"rho must be > 1, got {self.rho}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class RpcaDecomposition:
    low_rank: np.ndarray
    sparse: np.ndarray
    iterations: int
    final_residual: float
    converged: bool
    residual_history: list = field(default_factory=list)


def soft_threshold(M, tau):
    """Elementwise shrinkage ``sign(m) * max(|m| - tau, 0)``."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    M = np.asarray(M, dtype=np.float64)
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def _svd(M):
    try:
        return linalg.svd(M, full_matrices=False, check_finite=False)
    except linalg.LinAlgError:
        return linalg.svd(M, full_matrices=False, check_finite=False, lapack_driver="gesvd")


def singular_value_threshold(M, tau):
    """Shrink the singular values of ``M`` by ``tau`` (nuclear-norm prox)."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    M = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise ValueError("singular_value_threshold: matrix has non-finite entries")
    U, s, Vt = _svd(M)
    s = s - tau
    r = int(np.count_nonzero(s > 0))
    return (U[:, :r] * s[:r]) @ Vt[:r]


def rpca_alm(V, config: RpcaConfig | None = None) -> RpcaDecomposition:
    """Split ``V`` into low-rank ``L`` and sparse ``S`` with ``V ~ L + S``.

    Minimizes ``||L||_* + lam * ||S||_1`` subject to ``L + S = V`` by
    alternating the two proximal steps on the augmented Lagrangian and
    growing the penalty ``mu`` by ``rho`` each iteration. Iteration stops
    once ``||V - L - S||_F / ||V||_F <= tol``. Hitting ``max_iter`` is not
    an error; check ``converged``.
    """
    cfg = config or RpcaConfig()
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.size == 0:
        raise ValueError(f"V must be a non-empty 2-D matrix, got shape {V.shape}")
    if not np.all(np.isfinite(V)):
        raise ValueError("V has non-finite entries")

    norm_fro = linalg.norm(V, "fro")
    if norm_fro == 0.0:
        z = np.zeros_like(V)
        return RpcaDecomposition(z, z.copy(), 1, 0.0, True, [0.0])

    lam = cfg.lam if cfg.lam is not None else 1.0 / np.sqrt(max(V.shape))
    norm_two = linalg.norm(V, 2)
    mu = cfg.mu0 if cfg.mu0 is not None else 1.25 / norm_two
    mu_max = mu * _MU_MAX_FACTOR
    Y = V / max(norm_two, np.max(np.abs(V)) / lam)
    S = np.zeros_like(V)

    history = []
    residual = np.inf
    it = 0
    for it in range(1, int(cfg.max_iter) + 1):
        L = singular_value_threshold(V - S + Y / mu, 1.0 / mu)
        S = soft_threshold(V - L + Y / mu, lam / mu)
        R = V - L - S
        Y += mu * R
        mu = min(mu * cfg.rho, mu_max)
        residual = linalg.norm(R, "fro") / norm_fro
        history.append(residual)
        if residual <= cfg.tol:
            break
    converged = residual <= cfg.tol
    if not converged:
        logger.warning("rpca_alm stopped at max_iter=%d with residual %.3g", it, residual)
    return RpcaDecomposition(L, S, it, float(residual), converged, history)


def separate_voice(spec: Spectrogram, config: RpcaConfig | None = None, return_decomposition=False):
    """Split a mixture spectrogram into (voice, accompaniment) clips.

    RPCA runs on the magnitude; both parts are clamped to be non-negative,
    given the mixture phase, and inverted with :func:`istft`.
    """
    decomp = rpca_alm(spec.magnitude, config)
    phase = np.exp(1j * spec.phase)
    voice = istft(spec.with_bins(np.maximum(decomp.sparse, 0.0) * phase))
    music = istft(spec.with_bins(np.maximum(decomp.low_rank, 0.0) * phase))
    if return_decomposition:
        return voice, music, decomp
    return voice, music


class RobustPCA(BaseEstimator):
    """Estimator wrapper around :func:`rpca_alm`.

    After ``fit(V)`` the parts are in ``low_rank_`` and ``sparse_``;
    ``transform`` is not defined because the split is specific to ``V``.
    """

    def __init__(self, lam=None, mu0=None, rho=1.6, tol=1e-7, max_iter=500):
        self.lam = lam
        self.mu0 = mu0
        self.rho = rho
        self.tol = tol
        self.max_iter = max_iter

    def _config(self):
        return RpcaConfig(self.lam, self.mu0, self.rho, self.tol, self.max_iter)

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        d = rpca_alm(X, self._config())
        self.low_rank_ = d.low_rank
        self.sparse_ = d.sparse
        self.n_iter_ = d.iterations
        self.residual_ = d.final_residual
        self.converged_ = d.converged
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).sparse_


class VoiceSeparator(BaseEstimator):
    """STFT -> RPCA -> ISTFT voice/accompaniment separation for clips."""

    def __init__(self, window_len=1024, hop=256, lam=None, mu0=None, rho=1.6, tol=1e-7, max_iter=500):
        self.window_len = window_len
        self.hop = hop
        self.lam = lam
        self.mu0 = mu0
        self.rho = rho
        self.tol = tol
        self.max_iter = max_iter

    def rpca_config(self) -> RpcaConfig:
        return RpcaConfig(self.lam, self.mu0, self.rho, self.tol, self.max_iter)

    def separate(self, clip: AudioClip):
        spec = stft(clip, self.window_len, self.hop)
        return separate_voice(spec, self.rpca_config())

    def fit(self, X=None, y=None):
        return self

    def transform(self, clips):
        return [self.separate(c)[0] for c in clips]
