"""Indexed frames on periodic grids.

A frame is stored as a list of translation blocks. A block holds ``r``
generator spectra and a translation count ``M`` dividing ``n``; element
``(i, k)`` of the block is generator ``i`` shifted by ``k * L / M``. In
frequency this is a phase ``exp(-2 pi i m k / M)``, which lets analysis
and synthesis run through one length-``M`` FFT per generator. Blocks with
``M = 1`` are plain explicit element lists.

Coefficient vectors are always exposed in lexicographic label order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .grid import Grid, GridFunction, GridMismatchError


class FrameBoundError(RuntimeError):
    """Frame-bound iteration did not converge; carries the best bracket."""

    def __init__(self, msg, lower=np.nan, upper=np.nan):
        super().__init__(f"{msg} (best bracket A in [{lower:.6g}], B >= {upper:.6g})")
        self.lower = lower
        self.upper = upper


class DualFrameError(RuntimeError):
    """CG for the inverse frame operator stagnated."""

    def __init__(self, msg, residual):
        super().__init__(f"{msg}: relative residual {residual:.3e}")
        self.residual = residual


class IndexMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class IndexSet:
    """Finite, ordered, duplicate-free set of integer multi-indices."""

    labels: np.ndarray

    def __post_init__(self):
        lab = np.atleast_2d(np.asarray(self.labels, dtype=np.int64))
        if lab.size == 0:
            lab = lab.reshape(0, max(lab.shape[-1], 1))
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    def __len__(self):
        return self.labels.shape[0]

    def __eq__(self, other):
        return isinstance(other, IndexSet) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def tuples(self) -> list[tuple]:
        return [tuple(int(v) for v in row) for row in self.labels]

    def position(self, label) -> int:
        hit = np.flatnonzero(np.all(self.labels == np.asarray(label), axis=1))
        if hit.size == 0:
            raise KeyError(f"label {tuple(label)} not in index set")
        return int(hit[0])


@dataclass(frozen=True, eq=False)
class CoeffSeq:
    index_set: IndexSet
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (len(self.index_set),):
            raise IndexMismatchError(
                f"{v.shape[0] if v.ndim else 0} values for {len(self.index_set)} labels")
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def inner(self, other: "CoeffSeq") -> complex:
        if other.index_set != self.index_set:
            raise IndexMismatchError("coefficient index sets differ")
        return complex(np.vdot(other.values, self.values))


@dataclass(frozen=True, eq=False)
class Block:
    """``r`` generator spectra with ``M`` periodic translations each.

    ``labels`` has ``r * M`` rows ordered generator-major.
    """

    generators: np.ndarray
    shifts: int
    labels: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.generators, dtype=complex))
        lab = np.atleast_2d(np.asarray(self.labels, dtype=np.int64))
        n = g.shape[1]
        if self.shifts < 1 or n % self.shifts:
            raise ValueError(f"translation count {self.shifts} must divide n={n}")
        if lab.shape[0] != g.shape[0] * self.shifts:
            raise ValueError("block label count does not match generators x shifts")
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)
        object.__setattr__(self, "labels", lab)

    @property
    def size(self) -> int:
        return self.labels.shape[0]

    def analysis(self, X: np.ndarray, h: float) -> np.ndarray:
        r, n = self.generators.shape
        M = self.shifts
        if M == 1:
            return (h / n) * (self.generators.conj() @ X)
        Z = X[None, :] * self.generators.conj()
        fold = Z.reshape(r, n // M, M).sum(axis=1)
        return ((h / n) * M * np.fft.ifft(fold, axis=1)).ravel()

    def synthesis(self, c: np.ndarray) -> np.ndarray:
        r, n = self.generators.shape
        M = self.shifts
        if M == 1:
            return c @ self.generators
        A = np.fft.fft(c.reshape(r, M), axis=1)
        return np.einsum("im,im->m", self.generators, np.tile(A, (1, n // M)))

    def element_spectrum(self, j: int) -> np.ndarray:
        i, k = divmod(j, self.shifts)
        n = self.generators.shape[1]
        phase = np.exp(-2j * np.pi * ((np.arange(n) * k) % self.shifts) / self.shifts)
        return self.generators[i] * phase


class _ElementView(Sequence):
    def __init__(self, frame):
        self._frame = frame

    def __len__(self):
        return len(self._frame.index_set)

    def __getitem__(self, pos):
        if isinstance(pos, slice):
            return [self[i] for i in range(*pos.indices(len(self)))]
        return self._frame.element(pos)


@dataclass(frozen=True, eq=False)
class Frame:
    """Indexed family of grid functions spanning a frequency-support subspace.

    Parameters
    ----------
    grid : Grid
    blocks : list of Block
    support : bool array
        Frequency mask of the subspace the frame lives in.
    bound_lower, bound_upper : float
        Frame bounds A, B (0 means unknown).
    tight_constant : float, optional
        |w|_fr when the frame is tight, so that ``S = tight_constant**2 I``.
    minimal_flag : bool, optional
        True only when certified (orthonormal constructions), else None.
    truncation : dict
        Free-form record of the index truncation.
    """

    grid: Grid
    blocks: tuple
    support: np.ndarray
    bound_lower: float = 0.0
    bound_upper: float = 0.0
    tight_constant: float | None = None
    minimal_flag: bool | None = None
    truncation: dict = field(default_factory=dict)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("a frame needs at least one block")
        for b in blocks:
            if b.generators.shape[1] != self.grid.n:
                raise GridMismatchError("block generator length differs from grid size")
        sup = np.asarray(self.support, dtype=bool)
        if sup.shape != (self.grid.n,):
            raise ValueError("support mask must have one entry per frequency")
        sup.setflags(write=False)
        raw = np.concatenate([b.labels for b in blocks], axis=0)
        order = np.lexsort(raw.T[::-1])
        lab = raw[order]
        if len(lab) > 1 and np.any(np.all(lab[1:] == lab[:-1], axis=1)):
            raise ValueError("frame labels are not distinct")
        if self.bound_lower and self.bound_upper and self.bound_lower > self.bound_upper * (1 + 1e-12):
            raise ValueError("bound_lower exceeds bound_upper")
        offsets = np.cumsum([0] + [b.size for b in blocks])
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "_order", order)
        object.__setattr__(self, "_offsets", offsets)
        object.__setattr__(self, "index_set", IndexSet(lab))

    # construction helpers -------------------------------------------------
    @classmethod
    def from_elements(cls, elements: Sequence[GridFunction], labels=None, support=None,
                      certify: bool = True, **kw) -> "Frame":
        """Explicit frame from a list of grid functions.

        With ``certify`` the Gram matrix is checked; an orthonormal family is
        recorded as tight with constant 1, bounds (1, 1) and minimal.
        """
        grid = elements[0].grid
        for e in elements:
            grid.check(e.grid, "frame element")
        G = np.array([e.spectrum for e in elements])
        if labels is None:
            labels = [(i,) for i in range(len(elements))]
        if support is None:
            # FFT roundoff is not support
            support = np.any(np.abs(G) > 1e-12 * np.abs(G).max(), axis=0)
        block = Block(G, 1, np.asarray(labels))
        if certify and "tight_constant" not in kw and len(elements) <= 4096:
            gram = (grid.h / grid.n) * (G.conj() @ G.T)
            if np.allclose(gram, np.eye(len(elements)), atol=1e-12) and \
                    int(np.sum(support)) == len(elements):
                kw.update(tight_constant=1.0, bound_lower=1.0, bound_upper=1.0, minimal_flag=True)
        return cls(grid, (block,), support, **kw)

    def with_bounds(self, lower: float, upper: float, **kw) -> "Frame":
        return replace(self, bound_lower=float(lower), bound_upper=float(upper), **kw)

    # raw coefficient plumbing (internal order <-> lexicographic) -----------
    def _analysis_spec(self, X: np.ndarray) -> np.ndarray:
        h = self.grid.h
        raw = np.concatenate([b.analysis(X, h) for b in self.blocks])
        return raw[self._order]

    def _synthesis_spec(self, values: np.ndarray) -> np.ndarray:
        raw = np.empty(len(values), dtype=complex)
        raw[self._order] = values
        out = np.zeros(self.grid.n, dtype=complex)
        for b, lo, hi in zip(self.blocks, self._offsets[:-1], self._offsets[1:]):
            out += b.synthesis(raw[lo:hi])
        return out

    def _frame_op_spec(self, X: np.ndarray) -> np.ndarray:
        return self._synthesis_spec(self._analysis_spec(X))

    def to_internal(self, values: np.ndarray) -> np.ndarray:
        raw = np.empty(len(values), dtype=values.dtype)
        raw[self._order] = values
        return raw

    def block_slices(self):
        """Yield ``(block, lexicographic positions)`` pairs."""
        inv = np.empty(len(self._order), dtype=np.int64)
        inv[self._order] = np.arange(len(self._order))
        for b, lo, hi in zip(self.blocks, self._offsets[:-1], self._offsets[1:]):
            yield b, inv[lo:hi]

    # element access -------------------------------------------------------
    def __len__(self):
        return len(self.index_set)

    @property
    def labels(self) -> list[tuple]:
        return self.index_set.tuples()

    @property
    def elements(self) -> Sequence[GridFunction]:
        return _ElementView(self)

    def element(self, pos) -> GridFunction:
        if not isinstance(pos, (int, np.integer)):
            pos = self.index_set.position(pos)
        raw = int(self._order[pos])
        bi = int(np.searchsorted(self._offsets, raw, side="right") - 1)
        spec = self.blocks[bi].element_spectrum(raw - self._offsets[bi])
        return GridFunction.from_spectrum(spec, self.grid)

    def coeffs(self, values) -> CoeffSeq:
        return CoeffSeq(self.index_set, values)


def _check_x(frame: Frame, x: GridFunction):
    frame.grid.check(x.grid, "input function")


def analysis(frame: Frame, x: GridFunction) -> CoeffSeq:
    """Coefficients ``<x, w_lambda>`` in label order."""
    _check_x(frame, x)
    return CoeffSeq(frame.index_set, frame._analysis_spec(x.spectrum))


def synthesis(frame: Frame, a: CoeffSeq) -> GridFunction:
    """``sum a_lambda w_lambda``."""
    if a.index_set != frame.index_set:
        raise IndexMismatchError("coefficient labels do not match the frame index set")
    return GridFunction.from_spectrum(frame._synthesis_spec(a.values), frame.grid)


def frame_operator_apply(frame: Frame, x: GridFunction) -> GridFunction:
    _check_x(frame, x)
    return GridFunction.from_spectrum(frame._frame_op_spec(x.spectrum), frame.grid)


def _restricted_operator(frame: Frame):
    idx = np.flatnonzero(frame.support)
    n = frame.grid.n
    scale = np.sqrt(frame.grid.h / n)

    def matvec(c):
        X = np.zeros(n, dtype=complex)
        X[idx] = np.ravel(c) / scale
        return scale * frame._frame_op_spec(X)[idx]

    return idx.size, matvec


def estimate_frame_bounds(frame: Frame, trials: int = 1, tol: float = 1e-8,
                          seed: int = 0) -> tuple[float, float]:
    """Extreme eigenvalues of the frame operator on the support subspace.

    Small subspaces (dimension <= 256) are handled by a dense eigensolver.
    Otherwise Lanczos iteration (``trials`` random starts) gives B, and the
    shifted operator ``B I - S`` gives A.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dim, matvec = _restricted_operator(frame)
    if dim == 0:
        raise ValueError("frame support is empty")
    if dim <= 256:
        S = np.column_stack([matvec(e) for e in np.eye(dim, dtype=complex)])
        ev = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
        return float(max(ev[0], 0.0)), float(ev[-1])
    rng = np.random.default_rng(seed)
    maxiter = 10 * frame.grid.n
    op = LinearOperator((dim, dim), matvec=matvec, dtype=complex)
    upper = -np.inf
    lower = np.inf
    for _ in range(trials):
        v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        try:
            b = float(eigsh(op, k=1, which="LA", tol=tol, maxiter=maxiter, v0=v0,
                            return_eigenvectors=False)[0])
        except ArpackNoConvergence as err:
            best = max(err.eigenvalues.real) if len(err.eigenvalues) else np.nan
            raise FrameBoundError("upper frame bound did not converge", upper=best) from err
        upper = max(upper, b)
        shift = upper * (1 + 1e-12)
        shifted = LinearOperator((dim, dim), matvec=lambda c: shift * c - matvec(c), dtype=complex)
        try:
            top = float(eigsh(shifted, k=1, which="LA", tol=tol, maxiter=maxiter, v0=v0,
                              return_eigenvectors=False)[0])
        except ArpackNoConvergence as err:
            best = shift - max(err.eigenvalues.real) if len(err.eigenvalues) else np.nan
            raise FrameBoundError("lower frame bound did not converge", lower=best, upper=upper) from err
        lower = min(lower, shift - top)
    lower = max(lower, 0.0)
    return float(min(lower, upper)), float(upper)


def dual_apply(frame: Frame, x: GridFunction, tol: float = 1e-12, maxiter: int = 5000) -> GridFunction:
    """Apply ``S^{-1}`` on the support subspace.

    Tight frames use ``x / c**2``; everything else runs conjugate gradients
    with a relative-residual stop.
    """
    _check_x(frame, x)
    if frame.tight_constant is not None:
        return x / frame.tight_constant ** 2
    sup = frame.support
    b = np.where(sup, x.spectrum, 0.0)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return frame.grid.zeros()
    z = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rr = np.vdot(r, r).real
    for _ in range(maxiter):
        Sp = np.where(sup, frame._frame_op_spec(p), 0.0)
        pSp = np.vdot(p, Sp).real
        if pSp <= 0:
            raise DualFrameError("frame operator not positive definite on the support",
                                 np.sqrt(rr) / bnorm)
        a = rr / pSp
        z += a * p
        r -= a * Sp
        rr_new = np.vdot(r, r).real
        if np.sqrt(rr_new) <= tol * bnorm:
            return GridFunction.from_spectrum(z, frame.grid)
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise DualFrameError("CG stagnated before reaching the tolerance", np.sqrt(rr) / bnorm)


def reconstruct(frame: Frame, x: GridFunction, tol: float = 1e-12) -> GridFunction:
    """``sum <x, w_lambda> wbar_lambda`` via one dual application."""
    return dual_apply(frame, frame_operator_apply(frame, x), tol=tol)


def dual_synthesis(frame: Frame, a: CoeffSeq, tol: float = 1e-12) -> GridFunction:
    """``sum a_lambda wbar_lambda = S^{-1} sum a_lambda w_lambda``."""
    return dual_apply(frame, synthesis(frame, a), tol=tol)


def parseval_defect(frame: Frame, x: GridFunction) -> float:
    """Relative gap between ``||analysis(x)||^2`` and ``c^2 ||x||^2`` for tight frames."""
    c = frame.tight_constant if frame.tight_constant is not None else 1.0
    nx = x.norm() ** 2
    return abs(analysis(frame, x).norm() ** 2 - c * c * nx) / nx
