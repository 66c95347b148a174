"""Daubechies scaling filters by spectral factorization at high precision."""
from __future__ import annotations

from functools import lru_cache

import mpmath
import numpy as np

SUPPORTED = tuple(f"db{n}" for n in range(1, 9))


@lru_cache(maxsize=None)
def scaling_filter(order: int) -> tuple:
    """Minimum-phase lowpass synthesis filter with ``order`` vanishing moments.

    Returned as a tuple of 2*order floats summing to sqrt(2). The halfband
    polynomial sum_k C(order-1+k, k) y**k with y = (2 - z - 1/z)/4 is
    factored in the z domain; roots inside the unit circle form the
    minimum-phase factor, which is multiplied by ((1 + z)/2)**order.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    with mpmath.workdps(60):
        n = order
        # z**(n-1) * P((2 - z - 1/z)/4) as a polynomial in z, highest degree first.
        poly = [mpmath.mpf(0)] * (2 * n - 1)
        quarter = [mpmath.mpf(-1) / 4, mpmath.mpf(1) / 2, mpmath.mpf(-1) / 4]  # y*z, ascending
        for k in range(n):
            coef = mpmath.binomial(n - 1 + k, k)
            term = [mpmath.mpf(1)]
            for _ in range(k):
                term = _polymul(term, quarter)
            # term has degree 2k in z (ascending); shift by n-1-k to multiply z**(n-1-k)
            for i, t in enumerate(term):
                poly[i + n - 1 - k] += coef * t
        roots = mpmath.polyroots(list(reversed(poly)), maxsteps=500, extraprec=200) if n > 1 else []
        inside = [r for r in roots if abs(r) < 1]
        q = [mpmath.mpc(1)]
        for r in inside:
            q = _polymul(q, [-r, mpmath.mpc(1)])
        binom = [mpmath.binomial(n, i) for i in range(n + 1)]
        h = _polymul(q, binom)
        h = [mpmath.re(c) for c in h]
        scale = mpmath.sqrt(2) / mpmath.fsum(h)
        h = [c * scale for c in h]
        # h is ascending in z; the synthesis lowpass is front-loaded (minimum phase)
        return tuple(float(c) for c in reversed(h))


def _polymul(a, b):
    out = [mpmath.mpf(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def filter_bank(name: str):
    """Return (dec_lo, dec_hi, rec_lo, rec_hi) arrays for ``dbN``."""
    if name not in SUPPORTED:
        raise ValueError(f"unsupported wavelet {name!r}; choose from {SUPPORTED}")
    rec_lo = np.array(scaling_filter(int(name[2:])))
    n = rec_lo.size
    rec_hi = rec_lo[::-1] * (-1.0) ** np.arange(n)
    dec_lo = rec_lo[::-1].copy()
    dec_hi = rec_hi[::-1].copy()
    return dec_lo, dec_hi, rec_lo, rec_hi
