"""Backward heat problems and their constructed DFD systems.

The forward map sends an initial state theta0 to the state at time T; in
frequency it multiplies by ``m(omega) = E_{gamma,1}(-omega^2 T^gamma)``.

Two systems are built from a periodized Meyer wavelet basis:

* ``build_wvd`` (gamma < 1): wavelet-vaguelette system with
  ``kappa = 2^{-2 j}`` on level ``j >= 1`` and 1 below.
* ``build_band_dfd`` (gamma = 1): wavelets cut into frequency bands
  ``sqrt(N) <= |omega| < sqrt(N+1)`` with ``kappa = exp(-N T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dfd import DfdSystem, MultiplierOperator
from .frames import Block, Frame, estimate_frame_bounds
from .grid import Grid, GridFunction
from .mittag_leffler import bound_constants, mittag_leffler_neg


class NyquistError(ValueError):
    pass


class HeatOperator(MultiplierOperator):
    """Forward (fractional) heat map on a periodic grid."""

    def __init__(self, gamma: float, T: float, grid: Grid):
        if not 0 < gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not T > 0:
            raise ValueError("T must be positive")
        self.gamma = float(gamma)
        self.T = float(T)
        m = mittag_leffler_neg(self.gamma, -grid.omega ** 2 * self.T ** self.gamma)
        full = np.ones(grid.n, dtype=bool)
        super().__init__(grid, m, full, full)

    @property
    def m(self) -> np.ndarray:
        return self.multiplier.real


def forward(op: HeatOperator, theta0: GridFunction) -> GridFunction:
    return op.apply(theta0)


def adjoint(op: HeatOperator, y: GridFunction) -> GridFunction:
    return op.apply_adjoint(y)


def meyer_profile(t):
    """Smooth step ``t^4 (35 - 84 t + 70 t^2 - 20 t^3)`` clipped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 4 * (35 - 84 * t + 70 * t ** 2 - 20 * t ** 3)


@dataclass(frozen=True)
class MeyerWavelet:
    """Meyer wavelet with Fourier support ``a_u <= |omega| <= b_u``."""

    a_u: float = 2 * math.pi / 3
    b_u: float = 8 * math.pi / 3

    def __post_init__(self):
        if not 0 < self.a_u < self.b_u:
            raise ValueError("need 0 < a_u < b_u")
        if not math.isclose(self.b_u, 4 * self.a_u):
            raise ValueError("the Meyer construction needs b_u = 4 a_u")

    def psi_hat(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        a = self.a_u
        out = np.zeros(w.shape)
        lo = (w >= a) & (w <= 2 * a)
        hi = (w > 2 * a) & (w <= 4 * a)
        out[lo] = np.sin(0.5 * np.pi * meyer_profile(w[lo] / a - 1))
        out[hi] = np.cos(0.5 * np.pi * meyer_profile(w[hi] / (2 * a) - 1))
        return out * np.exp(0.5j * np.asarray(omega, dtype=float))

    def phi_hat(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        a = self.a_u
        out = np.where(w <= a, 1.0, 0.0)
        mid = (w > a) & (w <= 2 * a)
        out[mid] = np.cos(0.5 * np.pi * meyer_profile(w[mid] / a - 1))
        return out

    def level_band(self, j: int) -> tuple[float, float]:
        return 2.0 ** j * self.a_u, 2.0 ** j * self.b_u


def _translations(grid: Grid, j: int) -> int:
    M = 2.0 ** j * grid.L
    if abs(M - round(M)) > 1e-9 or round(M) < 1 or grid.n % int(round(M)):
        raise ValueError(f"level {j}: 2^j L = {M} translations must be an integer dividing n")
    return int(round(M))


def wavelet_blocks(grid: Grid, wavelet: MeyerWavelet, j_min: int, j_max: int, mask):
    """Scaling block at ``j_min`` (labelled ``j_min - 1``) plus wavelet levels.

    Returns a list of ``(level_label, generator_spectrum, M)``; generators
    are restricted to ``mask``.
    """
    w = grid.omega
    h = grid.h
    out = []
    M0 = _translations(grid, j_min)
    s = 2.0 ** j_min
    out.append((j_min - 1, np.where(mask, wavelet.phi_hat(w / s) / np.sqrt(s) / h, 0.0), M0))
    for j in range(j_min, j_max + 1):
        s = 2.0 ** j
        out.append((j, np.where(mask, wavelet.psi_hat(w / s) / np.sqrt(s) / h, 0.0), _translations(grid, j)))
    return out


def wvd_kappa(level: int) -> float:
    return 2.0 ** (-2 * level) if level >= 1 else 1.0


def _check_nyquist(grid: Grid, wavelet: MeyerWavelet, j_max: int):
    top = 2.0 ** j_max * wavelet.b_u
    if top >= grid.nyquist:
        raise NyquistError(
            f"2^{j_max} b_u = {top:.4g} is not below the Nyquist frequency {grid.nyquist:.4g}; "
            f"increase n or decrease L")


def meyer_frame(grid: Grid, wavelet: MeyerWavelet, j_range) -> Frame:
    """Truncated periodized Meyer basis, projected onto ``|omega| <= 2^{j_max} 2 a_u``.

    On that subspace the family is a Parseval frame.
    """
    j_min, j_max = j_range
    _check_nyquist(grid, wavelet, j_max)
    mask = grid.mask(hi=2.0 ** (j_max + 1) * wavelet.a_u)
    blocks = []
    for lev, g, M in wavelet_blocks(grid, wavelet, j_min, j_max, mask):
        labels = np.column_stack([np.full(M, lev), np.arange(M)])
        blocks.append(Block(g[None, :], M, labels))
    return Frame(grid, tuple(blocks), mask, bound_lower=1.0, bound_upper=1.0, tight_constant=1.0,
                 truncation={"j_min": j_min, "j_max": j_max, "scaling_label": j_min - 1})


def build_wvd(op: HeatOperator, wavelet: MeyerWavelet | None = None, j_range=(0, 5),
              estimate_v_bounds: bool = True) -> DfdSystem:
    """Wavelet-vaguelette DFD for the fractional problem.

    ``F v = kappa F u / m`` so that ``K* v = kappa u`` holds exactly on the grid.
    """
    if op.gamma >= 1:
        raise ValueError("build_wvd needs gamma < 1; use build_band_dfd for gamma = 1")
    wavelet = wavelet or MeyerWavelet()
    u = meyer_frame(op.grid, wavelet, j_range)
    inv_m = np.where(u.support, 1.0 / op.m, 0.0)
    vblocks = []
    kap = []
    for b in u.blocks:
        lev = int(b.labels[0, 0])
        k = wvd_kappa(lev)
        vblocks.append(Block(k * inv_m * b.generators, b.shifts, b.labels))
        kap.append(np.full(b.size, k))
    c_lo, c_hi = bound_constants(op.gamma)
    Tg = op.T ** op.gamma
    meta = {
        "gamma": op.gamma, "T": op.T, "n": op.grid.n, "L": op.grid.L,
        "j_min": j_range[0], "j_max": j_range[1], "a_u": wavelet.a_u, "b_u": wavelet.b_u,
        "ml_c_low": c_lo, "ml_c_high": c_hi,
        # multiplier bracket |kappa / m| on each level band
        "v_mult_low": min(1.0, wavelet.a_u ** 2 * Tg / c_hi),
        "v_mult_high": (1 + wavelet.b_u ** 2 * Tg) / c_lo,
    }
    v = Frame(op.grid, tuple(vblocks), u.support, truncation=dict(u.truncation))
    if estimate_v_bounds:
        A, B = estimate_frame_bounds(v)
        v = v.with_bounds(A, B)
    kappa = np.concatenate(kap)[u._order]
    return DfdSystem(u, v, kappa, op, kind="wvd", params=meta)


def build_band_dfd(op: HeatOperator, wavelet: MeyerWavelet | None = None, j_range=(0, 1),
                   N_max: int = 40, prune_tol: float = 1e-12) -> DfdSystem:
    """Band-partitioned DFD for the classical problem (gamma = 1).

    ``u_{lambda,N} = F^{-1}(1_{B_N} F u_lambda)``, ``kappa = exp(-N T)`` and
    ``F v = kappa exp(omega^2 T) F u``. Empty pairs are dropped.
    """
    if op.gamma != 1:
        raise ValueError("build_band_dfd needs gamma = 1")
    wavelet = wavelet or MeyerWavelet()
    grid = op.grid
    j_min, j_max = j_range
    top = math.sqrt(N_max + 1)
    if top > 2.0 ** (j_max + 1) * wavelet.a_u:
        raise ValueError(f"bands up to |omega| = {top:.4g} exceed the wavelet coverage; raise j_max")
    _check_nyquist(grid, wavelet, j_max)
    w = np.abs(grid.omega)
    mask = w < top
    band_of = band_index(grid)
    growth = np.exp(np.where(mask, w ** 2, 0.0) * op.T)
    ublocks, vblocks, kap = [], [], []
    for lev, g, M in wavelet_blocks(grid, wavelet, j_min, j_max, mask):
        gu, gv, labels, kk = [], [], [], []
        ref = np.linalg.norm(g)
        if ref == 0:
            continue
        for N in range(N_max + 1):
            sel = mask & (band_of == N)
            gn = np.where(sel, g, 0.0)
            if np.linalg.norm(gn) <= prune_tol * ref:
                continue
            k = math.exp(-N * op.T)
            gu.append(gn)
            gv.append(k * growth * gn)
            labels.append(np.column_stack([np.full(M, lev), np.arange(M), np.full(M, N)]))
            kk.append(np.full(M, k))
        if gu:
            lab = np.concatenate(labels)
            ublocks.append(Block(np.array(gu), M, lab))
            vblocks.append(Block(np.array(gv), M, lab))
            kap.append(np.concatenate(kk))
    trunc = {"j_min": j_min, "j_max": j_max, "N_max": N_max}
    u = Frame(grid, tuple(ublocks), mask, bound_lower=1.0, bound_upper=1.0, tight_constant=1.0,
              truncation=trunc)
    scale = np.exp(-band_of * op.T) * growth
    A_v = float(np.min(scale[mask] ** 2))
    B_v = float(np.max(scale[mask] ** 2))
    v = Frame(grid, tuple(vblocks), mask, bound_lower=A_v, bound_upper=B_v, truncation=dict(trunc))
    kappa = np.concatenate(kap)[u._order]
    meta = {"gamma": 1.0, "T": op.T, "n": grid.n, "L": grid.L, "j_min": j_min, "j_max": j_max,
            "N_max": N_max, "a_u": wavelet.a_u, "b_u": wavelet.b_u}
    return DfdSystem(u, v, kappa, op, kind="band", params=meta)


def band_index(grid: Grid) -> np.ndarray:
    """Band number N of every grid frequency."""
    w = np.abs(grid.omega)
    N = np.floor(w ** 2).astype(np.int64)
    N = np.where(np.sqrt(N + 1.0) <= w, N + 1, N)
    return np.where(np.sqrt(N.astype(float)) > w, N - 1, N)
