"""Spectral filter families and numerical checks of their standing assumptions.

A filter is a family ``g_alpha(mu)`` approximating ``1/mu``; the residual
factor is ``r_alpha(mu) = 1 - mu g_alpha(mu)``. The checkers scan log-spaced
(alpha, mu) grids and report measured constants plus any violations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Filter:
    """Regularizing filter with its known analytic constants.

    Attributes
    ----------
    kind : str
        ``"tikhonov"``, ``"cutoff"`` or a custom tag.
    g : callable
        Vectorized ``g(alpha, mu)``.
    spectrum_cap : float
        Upper end a* of admissible mu.
    c_g, gamma1, rho, ell_star, ell_upper : float
        Constants of the boundedness, a priori and discrepancy assumptions.
    """

    kind: str
    g: Callable
    spectrum_cap: float = np.inf
    c_g: float = 1.0
    gamma1: float = np.nan
    rho: float = np.nan
    ell_star: float = np.nan
    ell_upper: float = np.nan

    def eval(self, alpha, mu):
        return self.g(np.asarray(alpha, dtype=float), np.asarray(mu, dtype=float))

    def residual(self, alpha, mu):
        mu = np.asarray(mu, dtype=float)
        return 1.0 - mu * self.eval(alpha, mu)


def _tikhonov_g(alpha, mu):
    return 1.0 / (alpha + mu)


def _cutoff_g(alpha, mu):
    alpha, mu = np.broadcast_arrays(alpha, mu)
    out = np.zeros(alpha.shape)
    keep = (mu >= alpha) & (mu > 0)
    out[keep] = 1.0 / mu[keep]
    return out if out.ndim else float(out)


def tikhonov() -> Filter:
    """``g_alpha(mu) = 1 / (alpha + mu)``."""
    return Filter("tikhonov", _tikhonov_g, c_g=1.0, gamma1=0.5, rho=1.0, ell_star=1.0, ell_upper=1.0)


def spectral_cutoff() -> Filter:
    """Truncated-SVD style filter: ``1/mu`` for ``mu >= alpha`` else 0."""
    return Filter("cutoff", _cutoff_g, c_g=1.0, gamma1=1.0, rho=1.0, ell_star=1.0, ell_upper=1.0)


def parse_filter(spec: str) -> Filter:
    name = spec.strip().lower()
    if name in ("tikhonov", "tik"):
        return tikhonov()
    if name in ("cutoff", "spectral_cutoff", "tsvd"):
        return spectral_cutoff()
    raise ValueError(f"unknown filter {spec!r}; expected 'tikhonov' or 'cutoff'")


def log_grid(lo_exp: float, hi_exp: float, per_decade: int = 200) -> np.ndarray:
    """``10**lo_exp .. 10**hi_exp`` with ``per_decade`` points per decade."""
    count = int(round((hi_exp - lo_exp) * per_decade)) + 1
    return np.logspace(lo_exp, hi_exp, count)


def default_grids():
    """Six decades of alpha and mu at 200 points per decade, sharing nodes."""
    g = log_grid(-6, 0)
    return g, g.copy()


def _within_cap(f: Filter, mu):
    mu = np.asarray(mu, dtype=float)
    return mu[mu < f.spectrum_cap] if np.isfinite(f.spectrum_cap) else mu


def check_assumption_C(f: Filter, mu_grid=None, alpha_grid=None, conv_tol: float = 1e-2) -> dict:
    """Boundedness (C2), finiteness (C1) and pointwise convergence (C3).

    C3 is judged on the scanned range: for every mu the defect
    ``|mu g_alpha(mu) - 1|`` must be non-increasing as alpha decreases, and
    at the smallest alpha it must be below ``conv_tol`` for all
    ``mu >= 100 alpha_min``.
    """
    ag, mg = default_grids()
    alpha = np.sort(np.asarray(alpha_grid if alpha_grid is not None else ag, dtype=float))[::-1]
    mu = _within_cap(f, mu_grid if mu_grid is not None else mg)
    A, MU = np.meshgrid(alpha, mu, indexing="ij")
    G = f.eval(A, MU)
    prod = MU * G
    finite = bool(np.all(np.isfinite(G)))
    sup = float(np.max(np.abs(prod)))
    flags = []
    c2 = sup <= f.c_g * (1 + 1e-12) and bool(np.all(prod >= -1e-15))
    if not c2:
        i, j = np.unravel_index(np.argmax(np.abs(prod)), prod.shape)
        flags.append({"assumption": "C2", "alpha": float(alpha[i]), "mu": float(mu[j]),
                      "value": float(prod[i, j]), "limit": f.c_g})
    if not finite:
        i, j = np.argwhere(~np.isfinite(G))[0]
        flags.append({"assumption": "C1", "alpha": float(alpha[i]), "mu": float(mu[j])})
    defect = np.abs(prod - 1.0)
    increases = np.diff(defect, axis=0) > 1e-12
    relevant = mu >= 100 * alpha[-1]
    final_defect = defect[-1]
    worst = float(np.max(final_defect[relevant])) if np.any(relevant) else float("nan")
    c3 = (not np.any(increases)) and np.any(relevant) and worst <= conv_tol
    if not c3:
        flags.append({"assumption": "C3", "max_defect_at_min_alpha": worst,
                      "nonmonotone_points": int(np.sum(increases))})
    return {
        "filter": f.kind,
        "sup_mu_g": sup,
        "c_g": f.c_g,
        "C1": finite,
        "C2": bool(c2),
        "C3": bool(c3),
        "convergence_defect": final_defect.tolist() if len(mu) <= 64 else worst,
        "max_defect_at_min_alpha": worst,
        "passed": bool(finite and c2 and c3),
        "flags": flags,
    }


def check_assumption_A2(f: Filter, phi, alpha_grid=None, mu_grid=None, growth_tol: float = 1.5):
    """Measured ``(gamma1, gamma2)`` for a filter and index function pair.

    ``gamma1 = max_alpha sqrt(alpha) sup_mu sqrt(mu) g_alpha(mu)`` and
    ``gamma2 = max_alpha sup_mu |r_alpha(mu)| sqrt(phi(mu) / phi(alpha))``.
    Both grids are clipped to phi's admissible region. A constant that keeps
    growing across the top and bottom alpha decade by more than
    ``growth_tol`` is flagged as divergent.

    Returns
    -------
    gamma1_est, gamma2_est : float
    report : dict
    """
    ag, mg = default_grids()
    alpha = np.asarray(alpha_grid if alpha_grid is not None else ag, dtype=float)
    mu = np.asarray(mu_grid if mu_grid is not None else mg, dtype=float)
    cap = min(f.spectrum_cap, phi.domain_cap)
    alpha = np.sort(alpha[alpha <= cap])
    mu = np.sort(mu[mu <= cap])
    A, MU = np.meshgrid(alpha, mu, indexing="ij")
    G = f.eval(A, MU)
    g1_rows = np.sqrt(alpha) * np.max(np.sqrt(MU) * np.abs(G), axis=1)
    r = np.abs(1.0 - MU * G)
    g2_rows = np.max(r * np.sqrt(phi.phi(mu))[None, :], axis=1) / np.sqrt(phi.phi(alpha))
    flags = []
    for name, rows in (("gamma1", g1_rows), ("gamma2", g2_rows)):
        if not np.all(np.isfinite(rows)):
            flags.append({"constant": name, "reason": "non-finite"})
            continue
        dec = max(1, len(rows) // 6)
        lo, hi = np.max(rows[:dec]), np.max(rows[-dec:])
        mid = np.max(rows[dec:-dec]) if len(rows) > 2 * dec else max(lo, hi)
        if lo > growth_tol * mid or hi > growth_tol * mid:
            flags.append({"constant": name, "reason": "grows across alpha decades",
                          "edge": float(max(lo, hi)), "interior": float(mid)})
    g1 = float(np.max(g1_rows))
    g2 = float(np.max(g2_rows))
    report = {"filter": f.kind, "phi": phi.spec, "gamma1": g1, "gamma2": g2,
              "passed": not flags, "flags": flags}
    return g1, g2, report


def check_assumption_B(f: Filter, alpha_grid=None, mu_grid=None, rho_tol: float = 1e-4,
                       jump_tol: float = 0.05) -> dict:
    """Discrepancy-rule assumptions B1 and B2.

    B1(i): defect ``max_mu |r_alpha(mu) - rho|`` at the largest alpha.
    B1(ii): continuity in alpha, judged by the largest jump of r between
    neighbouring alpha nodes (``jump_tol``).
    B2: ``0 <= r_alpha <= g_alpha / ell_alpha`` pointwise, where
    ``ell_alpha = sup_mu g_alpha(mu)`` is scanned with ``mu = 0`` included,
    and ``ell_star <= alpha ell_alpha <= ell_upper``.
    """
    alpha = np.asarray(alpha_grid if alpha_grid is not None else log_grid(-6, 6), dtype=float)
    mu = _within_cap(f, mu_grid if mu_grid is not None else log_grid(-6, 0))
    alpha = np.sort(alpha)
    mu = np.concatenate([[0.0], np.sort(mu)])
    A, MU = np.meshgrid(alpha, mu, indexing="ij")
    G = f.eval(A, MU)
    R = 1.0 - MU * G
    rho_defect = float(np.max(np.abs(R[-1] - f.rho)))
    jump = float(np.max(np.abs(np.diff(R, axis=0)))) if len(alpha) > 1 else 0.0
    ell = np.max(G, axis=1)
    a_ell = alpha * ell
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = G / ell[:, None]
    slack = 1e-12
    bad_lo = R < -slack
    bad_hi = R > rhs + slack * np.maximum(1.0, np.abs(rhs))
    flags = []
    b1i = rho_defect <= rho_tol
    b1ii = jump <= jump_tol
    b2ii = not (np.any(bad_lo) or np.any(bad_hi))
    b2iii = bool(np.all(a_ell >= f.ell_star * (1 - 1e-12)) and np.all(a_ell <= f.ell_upper * (1 + 1e-12)))
    if not b1i:
        flags.append({"assumption": "B1(i)", "rho_defect": rho_defect})
    if not b1ii:
        i, j = np.unravel_index(np.argmax(np.abs(np.diff(R, axis=0))), (len(alpha) - 1, len(mu)))
        flags.append({"assumption": "B1(ii)", "alpha": float(alpha[i]), "mu": float(mu[j]), "jump": jump})
    if not b2ii:
        i, j = np.argwhere(bad_lo | bad_hi)[0]
        flags.append({"assumption": "B2(ii)", "alpha": float(alpha[i]), "mu": float(mu[j]),
                      "residual": float(R[i, j]), "bound": float(rhs[i, j]),
                      "violations": int(np.sum(bad_lo | bad_hi))})
    if not b2iii:
        flags.append({"assumption": "B2(iii)", "alpha_ell_min": float(a_ell.min()),
                      "alpha_ell_max": float(a_ell.max())})
    return {
        "filter": f.kind,
        "rho": f.rho,
        "rho_defect": rho_defect,
        "max_alpha_jump": jump,
        "alpha_ell_min": float(a_ell.min()),
        "alpha_ell_max": float(a_ell.max()),
        "B1": bool(b1i and b1ii),
        "B2": bool(b2ii and b2iii),
        "passed": bool(b1i and b1ii and b2ii and b2iii),
        "flags": flags,
    }
