"""Worst-case error diagnostics: lower bounds, coverage sets and Monte-Carlo sups."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dfd import DfdSystem
from .frames import CoeffSeq, dual_apply, synthesis
from .grid import GridFunction
from .source import DomainError, IndexFunction, source_norm


def delta_star(sys: DfdSystem, phi: IndexFunction, E: float, v_inf: float) -> np.ndarray:
    """``delta*_lambda = E sqrt(kappa^2 phi(kappa^2)) / v_inf`` per label.

    Labels where phi(kappa^2) is infinite (Log with kappa = 1) get ``inf``.
    """
    k2 = np.asarray(sys.kappa, dtype=float) ** 2
    return delta_star_values(k2, phi, E, v_inf)


def delta_star_values(k2, phi: IndexFunction, E: float, v_inf: float) -> np.ndarray:
    k2 = np.atleast_1d(np.asarray(k2, dtype=float))
    if np.any(k2 <= 0):
        raise DomainError("kappa^2 must be positive")
    out = np.full(k2.shape, np.inf)
    ok = k2 < phi.domain_max
    out[ok] = E * np.sqrt(k2[ok] * phi.phi(k2[ok])) / v_inf
    return out


@dataclass
class DensityReport:
    beta: float
    delta0: float
    delta_stars: np.ndarray
    floor: float
    covered_interval: tuple | None
    gaps: list = field(default_factory=list)

    @property
    def covered(self) -> bool:
        return not self.gaps

    def covers(self, delta: float) -> bool:
        """True if delta lies in the union of ``[d*, d*/beta]`` within ``[floor, delta0]``."""
        if not self.floor <= delta <= self.delta0 * (1 + 1e-12):
            return False
        return not any(a < delta < b for a, b in self.gaps)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "delta0": self.delta0, "floor": self.floor,
                "covered": self.covered, "covered_interval": self.covered_interval,
                "gaps": [list(g) for g in self.gaps], "delta_stars": self.delta_stars.tolist()}


def density_check(delta_stars, beta: float, delta0: float, rtol: float = 1e-12) -> DensityReport:
    """Union of ``[d*, d*/beta]`` and its gaps inside ``[min d*, delta0]``.

    A finite truncation always leaves ``(0, min d*)`` uncovered; that part is
    reported as ``floor`` rather than as a gap.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    ds = np.asarray(delta_stars, dtype=float)
    ds = np.unique(ds[np.isfinite(ds) & (ds > 0)])[::-1]
    if ds.size == 0:
        return DensityReport(beta, delta0, ds, np.inf, None, [(0.0, delta0)])
    floor = float(ds[-1])
    gaps = []
    reach = floor / beta
    for d in ds[::-1][1:]:
        if d > delta0:
            break
        if d > reach * (1 + rtol):
            gaps.append((float(reach), float(d)))
        reach = max(reach, d / beta)
    if reach * (1 + rtol) < delta0:
        gaps.append((float(reach), float(delta0)))
    covered = (floor, float(delta0)) if not gaps else None
    return DensityReport(float(beta), float(delta0), ds, floor, covered, gaps)


def lower_bound(phi: IndexFunction, E: float, delta: float, u_sup: float, v_inf: float, beta: float) -> float:
    """``beta E sqrt(Theta^{-1}(v_inf^2 delta^2 / E^2)) / u_sup``."""
    if min(E, delta, u_sup, v_inf, beta) <= 0:
        raise DomainError("lower_bound arguments must be positive")
    return float(beta / u_sup * E * math.sqrt(phi.theta_inv(v_inf ** 2 * delta ** 2 / E ** 2)))


def log_lower_bound_reference(p: float, E: float, delta: float, b_u: float, v_inf: float,
                              beta: float) -> float:
    """Leading-order Log-source lower bound ``beta E (ln(E^2/(v_inf delta)^2))^{-p/2} / sqrt(B_u)``.

    Asymptotic reference value only (no certified constant).
    """
    arg = math.log(E ** 2 / (v_inf * delta) ** 2)
    if arg <= 0:
        raise DomainError("delta too large for the logarithmic reference")
    return float(beta / math.sqrt(b_u) * E * arg ** (-p / 2))


def _witness_positions(sys: DfdSystem) -> list[int]:
    """One label per translation class of the coarsest lattice.

    All blocks are invariant under shifts by ``L / M_min``, so witnesses at
    these labels reproduce the error at every label.
    """
    m_min = min(b.shifts for b in sys.u.blocks)
    out = []
    for b, pos in sys.u.block_slices():
        r, M = b.generators.shape[0], b.shifts
        reps = M // m_min
        grid_pos = pos.reshape(r, M)[:, :reps]
        out.extend(int(p) for p in grid_pos.ravel())
    return sorted(out)


def empirical_worst_case(sys: DfdSystem, method: Callable[[GridFunction], GridFunction],
                         phi: IndexFunction, E: float, delta: float, draws: int = 10,
                         seed: int = 0, full_output: bool = False):
    """Certified Monte-Carlo lower estimate of the worst-case error of ``method``.

    Candidates are the single-mode witnesses ``E sqrt(phi(kappa^2)) ubar`` at
    one label per translation class plus ``draws`` random members of the
    source set; each is scaled to source norm exactly ``E^2``. For every
    candidate x the noise choices are ``e = 0``, ``e = -delta Kx/||Kx||``,
    ``e = -Kx'`` for ``x'`` scaled so that ``||Kx'|| <= delta`` (data zero),
    and for random members a random range direction of norm delta.
    """
    if draws < 0:
        raise ValueError("draws must be non-negative")
    K = sys.operator
    if K is None:
        raise ValueError("empirical_worst_case needs the forward operator on the system")
    rng = np.random.default_rng(seed)
    grid = sys.grid
    candidates = []
    k2 = sys.kappa ** 2
    w = phi.weight(k2)
    for pos in _witness_positions(sys):
        if w[pos] == 0:
            continue  # unconstrained direction of the source set
        c = np.zeros(len(sys.kappa), dtype=complex)
        c[pos] = E / math.sqrt(w[pos])
        candidates.append((dual_apply(sys.u, synthesis(sys.u, CoeffSeq(sys.index_set, c))), False))
    for _ in range(draws):
        candidates.append((grid.random(rng, sys.u.support), True))
    best = 0.0
    where = None
    zero = grid.zeros()
    for x, is_random in candidates:
        s = source_norm(x, sys, phi)
        if not s > 0:
            continue
        x = x * (E / math.sqrt(s))
        Kx = K.apply(x)
        nKx = Kx.norm()
        trials = [(x, Kx)]
        if nKx > 0:
            trials.append((x, Kx - Kx * (delta / nKx)))
            if nKx > delta:
                xs = x * (delta / nKx)
                trials.append((xs, zero))
            else:
                trials.append((x, zero))
        if is_random:
            e = grid.random(rng, sys.v.support)
            e = e * (delta / e.norm())
            trials.append((x, Kx + e))
            trials.append((x, Kx - e))
        for xt, y in trials:
            err = (method(y) - xt).norm()
            if err > best:
                best, where = err, ("random" if is_random else "witness")
    if full_output:
        return best, {"candidates": len(candidates), "argmax": where}
    return best
