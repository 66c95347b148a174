"""Kernel functions for the SVM dual."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["KernelSpec", "kernel_eval", "kernel_matrix", "scale_gamma", "gamma_from_sigma"]

KINDS = ("linear", "polynomial", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    """``linear``: x.x'. ``polynomial``: (slope * x.x' + coef0) ** degree.
    ``rbf``: exp(-gamma * |x - x'|**2)."""

    kind: str = "linear"
    degree: int = 3
    slope: float = 1.0
    coef0: float = 1.0
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {KINDS}")
        if int(self.degree) < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.kind == "rbf" and self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")

    def resolved(self, X) -> "KernelSpec":
        """Fill in an unset rbf ``gamma`` from training data (see :func:`scale_gamma`)."""
        if self.kind == "rbf" and self.gamma is None:
            return KernelSpec(self.kind, self.degree, self.slope, self.coef0, scale_gamma(X))
        return self

    def to_dict(self) -> dict:
        return {"kind": self.kind, "degree": self.degree, "slope": self.slope,
                "coef0": self.coef0, "gamma": self.gamma}


def scale_gamma(X) -> float:
    """``1 / (n_features * Var(X))``, or 1.0 for constant data."""
    X = np.asarray(X, dtype=np.float64)
    var = X.var()
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


def gamma_from_sigma(sigma: float) -> float:
    """The ``gamma = 1 / (2 sigma**2)`` width convention."""
    return 1.0 / (2.0 * sigma * sigma)


def kernel_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "linear":
        return A @ B.T
    if spec.kind == "polynomial":
        return (spec.slope * (A @ B.T) + spec.coef0) ** int(spec.degree)
    if spec.gamma is None:
        raise ValueError("rbf gamma unresolved; call KernelSpec.resolved(X) first")
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-spec.gamma * np.maximum(sq, 0.0))


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    x2 = np.asarray(x2, dtype=np.float64).ravel()
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {x2.size}")
    return float(kernel_matrix(spec, x[None, :], x2[None, :])[0, 0])
