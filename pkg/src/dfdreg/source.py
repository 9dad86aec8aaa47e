"""Index functions, the link function Theta and source-set weights.

Two families are supported:

* ``Poly(p)``: ``phi(mu) = mu**(p/2)``, concave for ``p <= 2``.
* ``Log(p)``: ``phi(mu) = (-ln mu)**(-p)`` on (0, 1). It is concave only on
  ``(0, exp(-(1 + p))]``, which is recorded as the cap ``a*``.

``Theta(mu) = mu * phi^{-1}(mu)`` is increasing; its inverse is computed by
guarded bisection in log space. Closed forms are kept for testing only.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class IndexFunction:
    """``kind`` is ``"poly"`` or ``"log"``; ``p > 0``."""

    kind: str
    p: float

    def __post_init__(self):
        if self.kind not in ("poly", "log"):
            raise ValueError(f"unknown index function kind {self.kind!r}")
        if not self.p > 0:
            raise ValueError("index function exponent must be positive")

    @property
    def spec(self) -> str:
        return f"{self.kind}:p={self.p:g}"

    @property
    def domain_cap(self) -> float:
        """a*: upper end of the region where phi is certified concave."""
        if self.kind == "poly":
            return np.inf
        return math.exp(-(1.0 + self.p))

    @property
    def domain_max(self) -> float:
        """Open upper end of the evaluation domain."""
        return np.inf if self.kind == "poly" else 1.0

    @property
    def concave_flag(self) -> bool:
        return self.kind == "log" or self.p <= 2

    # phi and inverse ------------------------------------------------------
    def phi(self, mu):
        mu = _check_open(mu, 0.0, self.domain_max, "phi argument")
        if self.kind == "poly":
            return mu ** (self.p / 2)
        return (-np.log(mu)) ** (-self.p)

    def phi_inv(self, z):
        z = _check_open(z, 0.0, np.inf, "phi^{-1} argument")
        if self.kind == "poly":
            return z ** (2.0 / self.p)
        with np.errstate(over="ignore"):
            return np.exp(-z ** (-1.0 / self.p))  # underflows to 0 for tiny z

    def weight(self, mu):
        """Source weight ``1 / phi(mu)``, extended to ``mu = 1`` (value 0 for Log)."""
        mu = np.asarray(mu, dtype=float)
        if np.any(mu <= 0) or (self.kind == "log" and np.any(mu > 1)):
            raise DomainError(f"source weight undefined for kappa^2 outside (0, {self.domain_max}]")
        if self.kind == "poly":
            return mu ** (-self.p / 2)
        return (-np.log(mu)) ** self.p

    # link function --------------------------------------------------------
    def theta(self, mu):
        mu = _check_open(mu, 0.0, np.inf, "Theta argument")
        return mu * self.phi_inv(mu)

    def theta_inv(self, w, tol: float = 1e-13, maxiter: int = 400):
        """Bisection inverse of Theta, ``|Theta(out) - w| <= tol * w``."""
        w = _check_open(w, 0.0, np.inf, "Theta^{-1} argument")
        scalar = np.ndim(w) == 0
        w = np.atleast_1d(np.asarray(w, dtype=float))
        lo = np.full(w.shape, -745.0)  # log of the bracket, Theta(e^-745) ~ 0
        hi = np.zeros(w.shape)
        with np.errstate(over="ignore"):
            for _ in range(64):
                short = self.theta(np.exp(hi)) < w
                if not np.any(short):
                    break
                hi[short] = 2 * hi[short] + 1
            else:
                raise DomainError("Theta^{-1}: upper bracket not found")
        if np.any(self.theta(np.exp(lo)) > w):
            raise DomainError("Theta^{-1}: argument below the representable range")
        done = np.zeros(w.shape, dtype=bool)
        out = np.exp(0.5 * (lo + hi))
        for _ in range(maxiter):
            mid = 0.5 * (lo + hi)
            val = self.theta(np.exp(mid))
            hit = np.abs(val - w) <= tol * w
            newly = hit & ~done
            out[newly] = np.exp(mid[newly])
            done |= hit
            if np.all(done):
                break
            up = val < w
            lo = np.where(up & ~done, mid, lo)
            hi = np.where(~up & ~done, mid, hi)
            stuck = (hi - lo) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(hi))
            if np.any(stuck & ~done):
                sel = stuck & ~done
                out[sel] = np.exp(mid[sel])
                done |= sel
        else:
            raise DomainError("Theta^{-1}: bisection did not converge")
        return float(out[0]) if scalar else out

    def theta_inv_closed(self, w):
        """Closed-form Theta^{-1} for Poly (oracle); None for Log."""
        if self.kind != "poly":
            return None
        return np.asarray(w, dtype=float) ** (self.p / (self.p + 2))


def _check_open(v, lo, hi, what):
    v = np.asarray(v, dtype=float)
    if np.any(~(v > lo)) or np.any(~(v < hi)):
        raise DomainError(f"{what} outside ({lo}, {hi})")
    return v if v.ndim else float(v)


def Poly(p: float) -> IndexFunction:
    return IndexFunction("poly", float(p))


def Log(p: float) -> IndexFunction:
    return IndexFunction("log", float(p))


_SPEC = re.compile(r"^\s*(poly|log)\s*:\s*p\s*=\s*([0-9.eE+-]+)\s*$")


def parse_phi(spec: str) -> IndexFunction:
    """Parse ``poly:p=<real>`` or ``log:p=<real>``."""
    m = _SPEC.match(spec)
    if not m:
        raise ValueError(f"cannot parse index function {spec!r}; use poly:p=<x> or log:p=<x>")
    return IndexFunction(m.group(1), float(m.group(2)))


def phi_eval(phi: IndexFunction, mu):
    return phi.phi(mu)


def phi_inv(phi: IndexFunction, z):
    return phi.phi_inv(z)


def theta_eval(phi: IndexFunction, mu):
    return phi.theta(mu)


def theta_inv(phi: IndexFunction, w, tol: float = 1e-13):
    return phi.theta_inv(w, tol=tol)


@dataclass(frozen=True)
class SourceSet:
    """``M_{phi,E}``: ``sum phi(kappa^2)^{-1} |<x, u>|^2 <= E^2``."""

    phi: IndexFunction
    E: float

    def contains(self, x, sys, rtol: float = 1e-12) -> bool:
        return source_norm(x, sys, self.phi) <= self.E ** 2 * (1 + rtol)


def source_norm(x, sys, phi: IndexFunction) -> float:
    """Weighted coefficient sum ``sum phi(kappa^2)^{-1} |<x, u_lambda>|^2``."""
    from .frames import analysis

    c = analysis(sys.u, x).values
    w = phi.weight(np.asarray(sys.kappa) ** 2)
    return float(np.sum(w * np.abs(c) ** 2))


def sobolev_to_source(theta0_Hp_norm: float, p: float, dfd_kind: str, params: dict) -> float:
    """Radius E with ``||theta0||_{H^p} <= norm  =>  theta0 in M_{phi,E}``.

    Parameters
    ----------
    theta0_Hp_norm : float
        Sobolev norm of the initial state.
    p : float
        Smoothness index.
    dfd_kind : {"wvd", "band"}
        ``"wvd"`` pairs with ``Poly(p)``: weights are ``2^{2 j p}`` on
        level j, bounded by ``|omega|^{2p} a_u^{-2p}`` on the level band,
        and each frequency lies in at most two bands, so
        ``E = sqrt(1 + 2 a_u^{-2p}) ||theta0||``.
        ``"band"`` pairs with ``Log(p)`` and uses
        ``E = (2T)^{p/2} b_u^p a_u^{-p/2} ||theta0||``.
    params : dict
        Needs ``a_u`` (and ``b_u``, ``T`` for ``"band"``).
    """
    a_u = float(params["a_u"])
    kind = dfd_kind.lower()
    if kind == "wvd":
        return math.sqrt(1.0 + 2.0 * a_u ** (-2.0 * p)) * theta0_Hp_norm
    if kind in ("band", "banddfd"):
        b_u = float(params["b_u"])
        T = float(params["T"])
        return (2.0 * T) ** (p / 2) * b_u ** p * a_u ** (-p / 2) * theta0_Hp_norm
    raise ValueError(f"unknown DFD kind {dfd_kind!r}")
