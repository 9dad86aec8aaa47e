"""Diagonal frame decompositions and the filtered DFD regularizer.

A DFD of K is a triple (u, v, kappa) with ``K* v_lambda = kappa_lambda u_lambda``.
The regularized solution is

    x_alpha = sum kappa g_alpha(kappa^2) <y, v_lambda> ubar_lambda,

and the Picard (pseudo-inverse) solution replaces ``kappa g`` by ``1/kappa``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .filters import Filter
from .frames import Block, CoeffSeq, Frame, analysis, dual_apply, estimate_frame_bounds, synthesis
from .grid import Grid, GridFunction


class PicardDivergenceError(ArithmeticError):
    pass


class ForwardOperator:
    """Bounded linear operator on grid functions.

    Subclasses implement :meth:`apply` and :meth:`apply_adjoint`;
    ``domain_mask`` and ``range_mask`` are the frequency supports of
    (ker K)^perp and the closure of ran K.
    """

    grid: Grid
    domain_mask: np.ndarray
    range_mask: np.ndarray

    def apply(self, x: GridFunction) -> GridFunction:
        raise NotImplementedError

    def apply_adjoint(self, y: GridFunction) -> GridFunction:
        raise NotImplementedError

    def domain_projector(self, x: GridFunction) -> GridFunction:
        return x.project(self.domain_mask)

    def range_projector(self, y: GridFunction) -> GridFunction:
        return y.project(self.range_mask)


class MultiplierOperator(ForwardOperator):
    """Fourier multiplier ``F K x = m * F x`` on a periodic grid."""

    def __init__(self, grid: Grid, multiplier, domain_mask=None, range_mask=None):
        self.grid = grid
        m = np.asarray(multiplier, dtype=complex)
        if m.shape != (grid.n,):
            raise ValueError("multiplier needs one value per frequency")
        self.multiplier = m
        nz = np.abs(m) > 0
        self.domain_mask = nz if domain_mask is None else np.asarray(domain_mask, bool)
        self.range_mask = nz if range_mask is None else np.asarray(range_mask, bool)

    def apply(self, x):
        self.grid.check(x.grid)
        return GridFunction.from_spectrum(self.multiplier * x.spectrum, self.grid)

    def apply_adjoint(self, y):
        self.grid.check(y.grid)
        return GridFunction.from_spectrum(self.multiplier.conj() * y.spectrum, self.grid)


@dataclass(frozen=True, eq=False)
class DfdSystem:
    """DFD triple; ``kappa`` is aligned with the shared label order."""

    u: Frame
    v: Frame
    kappa: np.ndarray
    operator: ForwardOperator | None = None
    kind: str = "generic"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.u.index_set != self.v.index_set:
            raise ValueError("u and v frames must share one index set")
        k = np.asarray(self.kappa, dtype=float)
        if k.shape != (len(self.u),):
            raise ValueError("kappa must have one entry per label")
        if not np.all(k > 0):
            raise ValueError("kappa values must be strictly positive")
        k.setflags(write=False)
        object.__setattr__(self, "kappa", k)

    @property
    def index_set(self):
        return self.u.index_set

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def with_kappa(self, kappa) -> "DfdSystem":
        return replace(self, kappa=np.asarray(kappa, dtype=float))

    def bounds(self, which: str) -> tuple[float, float]:
        """(A, B) of the u or v frame, estimated when not recorded."""
        fr = self.u if which == "u" else self.v
        if fr.bound_lower > 0 and fr.bound_upper > 0:
            return fr.bound_lower, fr.bound_upper
        return estimate_frame_bounds(fr)


@dataclass(frozen=True, eq=False)
class NoisyData:
    y_delta: GridFunction
    delta: float
    noise: GridFunction | None = None


def diagonal_system(grid: Grid, kappa_of_mode, modes=None) -> DfdSystem:
    """Fourier-mode SVD system of a real positive multiplier.

    ``u = v`` are normalized complex exponentials ``e_m`` on the selected
    FFT indices ``modes`` and ``K e_m = kappa_m e_m``.
    """
    n = grid.n
    modes = np.arange(n) if modes is None else np.asarray(modes)
    kappa_full = np.zeros(n)
    kappa_full[modes] = np.asarray(kappa_of_mode(modes) if callable(kappa_of_mode) else kappa_of_mode, float)
    G = np.zeros((len(modes), n), dtype=complex)
    G[np.arange(len(modes)), modes] = n / np.sqrt(grid.L)
    mask = np.zeros(n, dtype=bool)
    mask[modes] = True
    labels = modes.reshape(-1, 1)
    frame = Frame(grid, (Block(G, 1, labels),), mask, bound_lower=1.0, bound_upper=1.0,
                  tight_constant=1.0, minimal_flag=True, truncation={"modes": int(len(modes))})
    order = np.argsort(modes, kind="stable")
    op = MultiplierOperator(grid, kappa_full, mask, mask)
    return DfdSystem(frame, frame, kappa_full[modes][order], op, kind="diagonal",
                     params={"n": n, "L": grid.L})


def verify_dfd(K: ForwardOperator, sys: DfdSystem, tol: float = 1e-8, check_bounds: bool = True) -> dict:
    """Per-label relative residuals ``||K* v - kappa u|| / ||kappa u||``."""
    res = _dfd_residuals(K, sys)
    labels = sys.index_set.tuples()
    bad = np.flatnonzero(~(res <= tol))
    report = {
        "max_residual": float(np.max(res)) if res.size else 0.0,
        "residuals": res,
        "tol": tol,
        "count": int(res.size),
        "failures": [{"label": labels[i], "residual": float(res[i])} for i in bad],
        "passed": bool(bad.size == 0),
    }
    if check_bounds:
        for name in ("u", "v"):
            A, B = sys.bounds(name)
            report[f"{name}_bounds"] = (A, B)
            if not (A > 0 and A <= B * (1 + 1e-10)):
                report["passed"] = False
                report["failures"].append({"frame": name, "bounds": (A, B)})
    return report


def _dfd_residuals(K, sys):
    u, v = sys.u, sys.v
    kappa = sys.kappa
    res = np.empty(len(kappa))
    if isinstance(K, MultiplierOperator) and len(u.blocks) == len(v.blocks):
        mconj = K.multiplier.conj()
        h, n = u.grid.h, u.grid.n
        for (bu, pos), (bv, _) in zip(u.block_slices(), v.block_slices()):
            if bu.shifts != bv.shifts or not np.array_equal(bu.labels, bv.labels):
                break
            r, M = bu.generators.shape[0], bu.shifts
            kap = kappa[pos].reshape(r, M)
            out = np.empty((r, M))
            for i in range(r):
                lhs = mconj * bv.generators[i]
                for kv in np.unique(kap[i]):
                    rhs = kv * bu.generators[i]
                    out[i, kap[i] == kv] = np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs)
            res[pos] = out.ravel()
        else:
            return res
    for i in range(len(kappa)):
        ui, vi = u.element(i), v.element(i)
        rhs = ui * kappa[i]
        res[i] = (K.apply_adjoint(vi) - rhs).norm() / rhs.norm()
    return res


def _v_coeffs(sys: DfdSystem, y: GridFunction) -> np.ndarray:
    return analysis(sys.v, y).values


def picard_solve(sys: DfdSystem, y: GridFunction, cap: float = 1e12, tol: float = 1e-12) -> GridFunction:
    """``sum (1/kappa) <y, v> ubar`` with a magnitude-based divergence guard."""
    c = _v_coeffs(sys, y) / sys.kappa
    ny2 = y.norm() ** 2
    total = float(np.sum(np.abs(c) ** 2))
    if total > cap * max(ny2, np.finfo(float).tiny):
        raise PicardDivergenceError(
            f"Picard sum {total:.3e} exceeds {cap:.1e} * ||y||^2 = {cap * ny2:.3e}")
    return dual_apply(sys.u, synthesis(sys.u, CoeffSeq(sys.index_set, c)), tol=tol)


def filter_factors(sys: DfdSystem, f: Filter, alpha: float) -> np.ndarray:
    k = sys.kappa
    return k * f.eval(alpha, k * k)


def regularize_coeffs(sys: DfdSystem, f: Filter, alpha: float, yv: np.ndarray, tol: float = 1e-12) -> GridFunction:
    """Filtered expansion from precomputed v-coefficients ``<y, v>``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    c = filter_factors(sys, f, alpha) * yv
    return dual_apply(sys.u, synthesis(sys.u, CoeffSeq(sys.index_set, c)), tol=tol)


def regularize(sys: DfdSystem, f: Filter, alpha: float, y_delta: GridFunction, tol: float = 1e-12) -> GridFunction:
    """``x_alpha = sum kappa g_alpha(kappa^2) <y, v> ubar``."""
    sys.grid.check(y_delta.grid, "data")
    return regularize_coeffs(sys, f, alpha, _v_coeffs(sys, y_delta), tol=tol)


def stable_pseudoinverse_bound(sys: DfdSystem) -> float:
    """``|v|_sup / (kappa_0 |u|_inf)`` with ``|w|_inf = sqrt(A)``, ``|w|_sup = sqrt(B)``."""
    k0 = float(np.min(sys.kappa))
    if not k0 > 0:
        raise ValueError("inf kappa is zero on the truncated system")
    A_u, _ = sys.bounds("u")
    _, B_v = sys.bounds("v")
    if not A_u > 0:
        raise ValueError("u frame has a vanishing lower bound")
    return float(np.sqrt(B_v) / (k0 * np.sqrt(A_u)))


def add_noise(y: GridFunction, delta: float, seed, support=None) -> NoisyData:
    """Gaussian noise projected onto ``support`` and rescaled to norm delta.

    A single sequential draw of ``n`` real normals is used, so the result
    depends only on the seed.
    """
    if delta < 0:
        raise ValueError("noise level must be non-negative")
    if delta == 0:
        return NoisyData(y, 0.0, y.grid.zeros())
    rng = np.random.default_rng(seed)
    e = GridFunction(rng.standard_normal(y.grid.n).astype(complex), y.grid)
    if support is not None:
        e = e.project(support)
    e = e * (delta / e.norm())
    return NoisyData(y + e, float(delta), e)
