import math

import numpy as np
import pytest

from dfdreg.analysis import (delta_star, delta_star_values, density_check, empirical_worst_case,
                             log_lower_bound_reference, lower_bound)
from dfdreg.dfd import diagonal_system, picard_solve, regularize
from dfdreg.filters import tikhonov
from dfdreg.frames import CoeffSeq, synthesis
from dfdreg.grid import Grid
from dfdreg.param import a_priori_alpha, prior_error_bound
from dfdreg.source import DomainError, Log, Poly


def toy(n=64, kappa=None):
    g = Grid(n, 2 * np.pi)
    f = np.abs(np.fft.fftfreq(n, 1 / n))
    k = 1.0 / (f + 1) if kappa is None else np.full(n, kappa)
    return diagonal_system(g, lambda m: k[m])


def test_delta_star_poly():
    s = toy(kappa=0.25)
    assert np.allclose(delta_star(s, Poly(2), 1.0, 1.0), 2.0 ** -4, rtol=1e-15)
    assert np.allclose(delta_star(toy(kappa=1.0), Poly(2), 3.0, 2.0), 1.5)


def test_delta_star_log():
    # kappa = e^{-N T} with N = T = 1: delta* = sqrt((2NT)^{-p} e^{-2NT})
    k2 = math.exp(-2)
    assert delta_star_values(k2, Log(1), 1.0, 1.0)[0] == pytest.approx(math.sqrt(0.5 * math.exp(-2)))
    assert delta_star_values(k2, Log(1e-12), 1.0, 1.0)[0] == pytest.approx(math.exp(-1), rel=1e-9)
    assert np.isinf(delta_star_values(1.0, Log(1), 1.0, 1.0)[0])
    with pytest.raises(DomainError):
        delta_star_values(0.0, Poly(2), 1.0, 1.0)


def test_density_geometric():
    ds = 2.0 ** (-4 * np.arange(8))
    rep = density_check(ds, 2.0 ** -4, 1.0)
    assert rep.covered and rep.floor == ds[-1]
    assert rep.covers(1e-3) and not rep.covers(ds[-1] / 2)
    rep = density_check(ds, 2.0 ** -2, 1.0)
    assert not rep.covered and len(rep.gaps) == 7
    assert not rep.covers(2.0 ** -4 / 2 ** 1.5)


def test_density_band_sequence():
    T = 1.0
    N = np.arange(0, 41)
    k2 = np.exp(-2 * N[1:] * T)
    # vanishing p: geometric ratio e^{-T}, covered exactly with beta = e^{-T}
    ds = delta_star_values(k2, Log(1e-12), 1.0, 1.0)
    assert density_check(ds, math.exp(-T), ds[0]).covered
    # p = 1: ratios e^{-T} sqrt(N / (N + 1)) leave gaps
    ds = delta_star_values(k2, Log(1), 1.0, 1.0)
    assert not density_check(ds, math.exp(-T), ds[0]).covered
    assert density_check(ds, math.exp(-T) / math.sqrt(2), ds[0]).covered


def test_density_rejects_beta():
    with pytest.raises(ValueError):
        density_check([1.0], 1.5, 1.0)


def test_lower_bound_poly_formula():
    for p in (1.0, 2.0, 4.0):
        beta, E, d, u, v = 0.25, 3.0, 1e-3, 1.5, 0.7
        want = beta * v ** (p / (p + 2)) / u * d ** (p / (p + 2)) * E ** (2 / (p + 2))
        assert lower_bound(Poly(p), E, d, u, v, beta) == pytest.approx(want, rel=1e-11)


def test_lower_bound_roundtrip():
    phi, E, v = Log(1), 2.0, 1.0
    z = 0.3
    d = E * math.sqrt(phi.theta(z)) / v
    assert lower_bound(phi, E, d, 1.0, v, 0.5) == pytest.approx(0.5 * E * math.sqrt(z), rel=1e-10)


def test_log_reference_is_leading_order():
    phi = Log(1)
    r = [lower_bound(phi, 1.0, d, 1.0, 1.0, 0.5) / log_lower_bound_reference(1.0, 1.0, d, 1.0, 1.0, 0.5)
         for d in (1e-10, 1e-40, 1e-150)]
    assert abs(r[2] - 1) < abs(r[1] - 1) < abs(r[0] - 1) < 0.2


def test_lower_bound_rejects_nonpositive():
    with pytest.raises(DomainError):
        lower_bound(Poly(2), 1.0, 0.0, 1.0, 1.0, 0.5)


def test_witness_attains_modulus():
    s = toy()
    phi, E = Poly(2), 1.0
    for pos in (1, 5, 9):
        k2 = s.kappa[pos] ** 2
        c = np.zeros(len(s.kappa), dtype=complex)
        c[pos] = E * math.sqrt(phi.phi(k2))
        x = synthesis(s.u, CoeffSeq(s.index_set, c))
        dstar = delta_star(s, phi, E, 1.0)[pos]
        assert x.norm() == pytest.approx(E * math.sqrt(phi.theta_inv(dstar ** 2 / E ** 2)), rel=1e-10)


def test_empirical_zero_noise_exact_recovery():
    s = toy(32)
    err = empirical_worst_case(s, lambda y: picard_solve(s, y), Poly(2), 1.0, 0.0, draws=3)
    assert err <= 1e-12


def test_empirical_sandwich_on_toy():
    s = toy(64)
    phi, E, f = Poly(2), 1.0, tikhonov()
    beta = 0.5
    dens = density_check(delta_star(s, phi, E, 1.0), beta, 0.1)
    checked = 0
    for d in np.logspace(-1, -3, 7):
        if not dens.covers(d):
            continue
        alpha = a_priori_alpha(phi, d, E, 1.0)
        emp = empirical_worst_case(s, lambda y: regularize(s, f, alpha, y), phi, E, d, draws=5)
        lb = lower_bound(phi, E, d, 1.0, 1.0, beta)
        ub = prior_error_bound(phi, E, d, 1.0, 1.0, 1.0, f.gamma1, 1.0)
        assert lb <= emp <= ub
        checked += 1
    assert checked >= 5


def test_empirical_is_deterministic():
    s = toy(32)
    m = lambda y: regularize(s, tikhonov(), 1e-2, y)
    a = empirical_worst_case(s, m, Poly(2), 1.0, 1e-2, draws=4, seed=3)
    b = empirical_worst_case(s, m, Poly(2), 1.0, 1e-2, draws=4, seed=3)
    assert a == b
