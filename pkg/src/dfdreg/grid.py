"""Periodic sampling grids and grid functions.

Every Hilbert space in the package is realized as L^2([0, L)) sampled at n
uniform points. With ``X = fft(x)`` the inner product is

    <x, y> = h * sum(x * conj(y)) = (h / n) * sum(X * conj(Y)),

with ``h = L / n``. A band-limited function f on the real line sampled this
way has ``X[m] = fhat(omega_m) / h`` where ``omega_m = 2 pi m / L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridMismatchError(ValueError):
    """Raised when two objects live on different grids."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, L) with n points (n a power of two)."""

    n: int
    L: float

    def __post_init__(self):
        n = int(self.n)
        if n < 1 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two, got n={self.n}")
        if not self.L > 0:
            raise ValueError(f"domain length must be positive, got L={self.L}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def omega(self) -> np.ndarray:
        """Angular frequencies in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    @property
    def nyquist(self) -> float:
        return np.pi * self.n / self.L

    def mask(self, lo: float = 0.0, hi: float = np.inf, closed_hi: bool = True) -> np.ndarray:
        """Boolean frequency mask for ``lo <= |omega| <= hi`` (or ``< hi``)."""
        w = np.abs(self.omega)
        upper = w <= hi if closed_hi else w < hi
        return (w >= lo) & upper

    def check(self, other: "Grid", what: str = "operand"):
        if self != other:
            raise GridMismatchError(
                f"{what} lives on grid (n={other.n}, L={other.L}) "
                f"but (n={self.n}, L={self.L}) was expected")

    def zeros(self) -> "GridFunction":
        return GridFunction(np.zeros(self.n, dtype=complex), self)

    def random(self, rng: np.random.Generator, mask: np.ndarray | None = None) -> "GridFunction":
        """Real Gaussian draw, optionally projected onto a frequency mask."""
        f = GridFunction(rng.standard_normal(self.n).astype(complex), self)
        return f if mask is None else f.project(mask)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples on a periodic grid.

    Parameters
    ----------
    samples : array_like
        Complex values at ``x_l = l * h``.
    grid : Grid
        The carrier grid.
    """

    samples: np.ndarray
    grid: Grid
    _spec: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_spectrum(cls, spec: np.ndarray, grid: Grid) -> "GridFunction":
        spec = np.asarray(spec, dtype=complex)
        f = cls(np.fft.ifft(spec), grid)
        spec = spec.copy()
        spec.setflags(write=False)
        object.__setattr__(f, "_spec", spec)
        return f

    @property
    def spacing(self) -> float:
        return self.grid.h

    @property
    def domain_length(self) -> float:
        return self.grid.L

    @property
    def spectrum(self) -> np.ndarray:
        if self._spec is None:
            spec = np.fft.fft(self.samples)
            spec.setflags(write=False)
            object.__setattr__(self, "_spec", spec)
        return self._spec

    def inner(self, other: "GridFunction") -> complex:
        """<self, other>, linear in the first slot."""
        self.grid.check(other.grid)
        return complex(self.grid.h * np.vdot(other.samples, self.samples))

    def norm(self) -> float:
        return float(np.sqrt(self.grid.h) * np.linalg.norm(self.samples))

    def project(self, mask: np.ndarray) -> "GridFunction":
        return GridFunction.from_spectrum(np.where(mask, self.spectrum, 0.0), self.grid)

    def in_subspace(self, mask: np.ndarray, tol: float = 1e-8) -> bool:
        off = np.linalg.norm(np.where(mask, 0.0, self.spectrum))
        return bool(off <= tol * max(np.linalg.norm(self.spectrum), np.finfo(float).tiny))

    def __add__(self, other):
        self.grid.check(other.grid)
        return GridFunction(self.samples + other.samples, self.grid)

    def __sub__(self, other):
        self.grid.check(other.grid)
        return GridFunction(self.samples - other.samples, self.grid)

    def __mul__(self, c):
        return GridFunction(self.samples * c, self.grid)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridFunction(self.samples / c, self.grid)

    def __neg__(self):
        return GridFunction(-self.samples, self.grid)


def sobolev_norm(x: GridFunction, p: float) -> float:
    """H^p norm, ``(1/L) sum (1 + omega^2)^p |fhat(omega)|^2`` with fhat = h X."""
    g = x.grid
    w = (1.0 + g.omega ** 2) ** p
    return float(np.sqrt(g.h / g.n * np.sum(w * np.abs(x.spectrum) ** 2)))
