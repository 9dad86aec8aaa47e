"""Regularization parameter choice: a priori rule and the discrepancy principle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dfd import DfdSystem, _v_coeffs
from .filters import Filter
from .grid import GridFunction
from .source import DomainError, IndexFunction


class MorozovSolvabilityError(ValueError):
    """``tau sqrt(B_v) delta < rho sqrt(A_v) ||P y||`` is violated."""

    def __init__(self, lhs: float, rhs: float):
        super().__init__(
            f"discrepancy equation not solvable: tau*sqrt(B_v)*delta = {lhs:.6g} "
            f">= rho*sqrt(A_v)*||P y_delta|| = {rhs:.6g}")
        self.lhs = lhs
        self.rhs = rhs


class MorozovBracketError(RuntimeError):
    pass


def a_priori_alpha(phi: IndexFunction, delta: float, E: float, a_v: float) -> float:
    """``alpha = phi^{-1}(Theta^{-1}(a_v delta^2 / E^2))``."""
    if not (delta > 0 and E > 0 and a_v > 0):
        raise DomainError("delta, E and a_v must be positive")
    w = a_v * delta ** 2 / E ** 2
    return float(phi.phi_inv(phi.theta_inv(w)))


def discrepancy_from_coeffs(kappa: np.ndarray, f: Filter, alpha: float, yv: np.ndarray) -> float:
    k2 = kappa * kappa
    r = 1.0 - k2 * f.eval(alpha, k2)
    return float(np.sqrt(np.sum(r * r * np.abs(yv) ** 2)))


def discrepancy(sys: DfdSystem, f: Filter, alpha: float, y_delta: GridFunction) -> float:
    """``d(alpha) = (sum (1 - kappa^2 g_alpha(kappa^2))^2 |<y, v>|^2)^{1/2}``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return discrepancy_from_coeffs(sys.kappa, f, alpha, _v_coeffs(sys, y_delta))


@dataclass(frozen=True)
class MorozovConfig:
    tau: float = 1.5
    b_v: float = 1.0
    rho: float = 1.0
    a_v_lower: float = 1.0
    bracket: tuple = (1e-12, 1e4)
    tol: float = 1e-12
    max_expand: int = 60
    maxiter: int = 2000

    def __post_init__(self):
        if not self.tau > 1:
            raise ValueError("tau must exceed 1")
        lo, hi = self.bracket
        if not 0 < lo < hi:
            raise ValueError("bracket must be positive and ordered")

    @classmethod
    def for_system(cls, sys: DfdSystem, f: Filter, tau: float = 1.5, **kw) -> "MorozovConfig":
        A_v, B_v = sys.bounds("v")
        return cls(tau=tau, b_v=B_v, rho=f.rho, a_v_lower=A_v, **kw)


def morozov_solve(sys: DfdSystem, f: Filter, cfg: MorozovConfig, y_delta: GridFunction,
                  delta: float, full_output: bool = False, yv: np.ndarray | None = None):
    """Solve ``d(alpha) = tau sqrt(B_v) delta`` by bisection in log alpha.

    Returns alpha, or ``(alpha, info)`` with ``full_output``.
    """
    target = cfg.tau * math.sqrt(cfg.b_v) * delta
    Py = y_delta.project(sys.v.support).norm()
    rhs = cfg.rho * math.sqrt(cfg.a_v_lower) * Py
    if not (0 < target < rhs):
        raise MorozovSolvabilityError(target, rhs)
    if yv is None:
        yv = _v_coeffs(sys, y_delta)
    evals = 0

    def d(t):
        nonlocal evals
        evals += 1
        return discrepancy_from_coeffs(sys.kappa, f, math.exp(t), yv)

    lo, hi = math.log(cfg.bracket[0]), math.log(cfg.bracket[1])
    step = math.log(2.0)
    for _ in range(cfg.max_expand):
        if d(lo) <= target:
            break
        lo -= step
    else:
        raise MorozovBracketError(f"no lower bracket after 2^{cfg.max_expand} expansion")
    for _ in range(cfg.max_expand):
        if d(hi) >= target:
            break
        hi += step
    else:
        raise MorozovBracketError(f"no upper bracket after 2^{cfg.max_expand} expansion")
    # an absolute tolerance below the float spacing of the target is unreachable
    tol = max(cfg.tol, 4 * np.spacing(target))
    best_t, best_r = lo, abs(d(lo) - target)
    for it in range(1, cfg.maxiter + 1):
        mid = 0.5 * (lo + hi)
        val = d(mid)
        res = abs(val - target)
        if res < best_r:
            best_t, best_r = mid, res
        if res <= tol:
            alpha = math.exp(mid)
            info = {"alpha": alpha, "residual": res, "iterations": it, "evaluations": evals,
                    "target": target, "solvability_lhs": target, "solvability_rhs": rhs}
            return (alpha, info) if full_output else alpha
        if val < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2 * np.finfo(float).eps * max(1.0, abs(hi)):
            break
    raise MorozovBracketError(
        f"bisection collapsed at alpha={math.exp(best_t):.6g} with |d - target| = {best_r:.3e} > tol {tol:g}")


def prior_error_bound(phi: IndexFunction, E: float, delta: float, a_u: float, a_v: float,
                      b_v: float, gamma1: float, gamma2: float, v_inf_sq: float | None = None) -> float:
    """A priori rate bound
    ``sqrt(1/(A_u A_v)) (gamma1 sqrt(B_v) + gamma2 sqrt(A_v)) E sqrt(Theta^{-1}(|v|_inf^2 delta^2/E^2))``.
    """
    v2 = a_v if v_inf_sq is None else v_inf_sq
    t = phi.theta_inv(v2 * delta ** 2 / E ** 2)
    return float(math.sqrt(1.0 / (a_u * a_v)) * (gamma1 * math.sqrt(b_v) + gamma2 * math.sqrt(a_v))
                 * E * math.sqrt(t))


def posterior_error_bound(phi: IndexFunction, E: float, delta: float, v_inf_sq: float,
                          a_u: float, b_u_frame: float, tau: float, v_ratio: float = 1.0) -> float:
    """``sqrt(v_ratio B_u / A_u) (tau + 1) E sqrt(Theta^{-1}(|v|_inf^2 delta^2 / E^2))``.

    Concave phi only. ``v_ratio = B_v / A_v`` gives the bound that the
    residual estimate actually supports for a non-tight v-frame; the default
    1 is exact when v is tight.
    """
    if not phi.concave_flag:
        raise DomainError(f"{phi.spec} is not concave; the a posteriori bound needs concavity")
    if not v_ratio >= 1:
        raise ValueError("v_ratio = B_v / A_v must be at least 1")
    t = phi.theta_inv(v_inf_sq * delta ** 2 / E ** 2)
    return float(math.sqrt(v_ratio * b_u_frame / a_u) * (tau + 1.0) * E * math.sqrt(t))
