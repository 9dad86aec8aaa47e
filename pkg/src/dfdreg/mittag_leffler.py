"""Mittag-Leffler function E_{gamma,1}(z) for real z <= 0 and 0 < gamma <= 1.

Small arguments use the power series with exact (fsum) accumulation. Larger
arguments use the real-line integral

    E_gamma(-x) = sin(gamma pi) / (gamma pi)
                  * int_0^inf exp(-u^(1/gamma)) x / (u^2 + 2 x u cos(gamma pi) + x^2) du,

which is free of cancellation. For ``gamma = 1`` the exponential is returned.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import rgamma

# series is used while x^(1/gamma) <= this; the largest term is then ~e^4
SERIES_LIMIT = 4.0


def _series(gamma: float, x: float) -> float:
    terms = []
    k = 0
    peak = x ** (1.0 / gamma)
    while True:
        t = (-x) ** k * rgamma(gamma * k + 1.0)
        terms.append(t)
        if k > peak + 5 and abs(t) < 1e-20:
            break
        k += 1
    return math.fsum(terms)


def _integral(gamma: float, x: float) -> float:
    c = math.cos(gamma * math.pi)
    inv = 1.0 / gamma
    upper = 60.0 ** gamma

    def f(u):
        return math.exp(-u ** inv) * x / (u * u + 2.0 * x * u * c + x * x)

    pts = [x * abs(c)] if (c < 0 and 0 < x * abs(c) < upper) else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(f, 0.0, upper, points=pts, epsabs=0.0, epsrel=1e-13, limit=400)
    return math.sin(gamma * math.pi) / (gamma * math.pi) * val


@lru_cache(maxsize=1 << 16)
def _ml_scalar(gamma: float, x: float) -> float:
    if x == 0.0:
        return 1.0
    if x ** (1.0 / gamma) <= SERIES_LIMIT:
        return _series(gamma, x)
    return _integral(gamma, x)


def mittag_leffler_neg(gamma: float, z):
    """E_{gamma,1}(z) for z <= 0 (scalar or array)."""
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    za = np.asarray(z, dtype=float)
    if np.any(za > 0):
        raise ValueError("only non-positive arguments are supported")
    if gamma == 1:
        out = np.exp(za)
    else:
        xs, inv = np.unique(-za.ravel(), return_inverse=True)
        vals = np.array([_ml_scalar(float(gamma), float(x)) for x in xs])
        out = vals[inv].reshape(za.shape)
    return float(out) if out.ndim == 0 else out


def bound_constants(gamma: float, zmax: float = 1e6, points: int = 400) -> tuple[float, float]:
    """Empirical (c_low, c_high) with c_low <= (1+|z|) E_{gamma,1}(z) <= c_high on [-zmax, 0]."""
    z = -np.concatenate([[0.0], np.logspace(-6, np.log10(zmax), points)])
    r = (1.0 - z) * mittag_leffler_neg(gamma, z)
    return float(np.min(r)), float(np.max(r))
