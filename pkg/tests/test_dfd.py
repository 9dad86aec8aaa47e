import math

import numpy as np
import pytest

from dfdreg.dfd import (DfdSystem, MultiplierOperator, PicardDivergenceError, add_noise,
                        diagonal_system, picard_solve, regularize, stable_pseudoinverse_bound,
                        verify_dfd)
from dfdreg.filters import spectral_cutoff, tikhonov
from dfdreg.frames import analysis
from dfdreg.grid import Grid, GridFunction


def toy(n=32, kappa=None):
    g = Grid(n, 2 * np.pi)
    freq = np.abs(np.fft.fftfreq(n, 1 / n))
    k = (1.0 / (freq + 1)) if kappa is None else np.broadcast_to(kappa, (n,)).astype(float)
    return diagonal_system(g, lambda m: k[m])


def test_diagonal_verify_is_exact():
    s = toy()
    rep = verify_dfd(s.operator, s)
    assert rep["passed"] and rep["max_residual"] <= 1e-15


def test_corrupted_kappa_fails_everywhere():
    s = toy()
    bad = s.with_kappa(s.kappa * 1.01)
    rep = verify_dfd(s.operator, bad)
    assert not rep["passed"]
    assert len(rep["failures"]) == len(s.kappa)
    assert np.allclose(rep["residuals"], 0.01 / 1.01, rtol=1e-10)


def test_system_validation():
    s = toy()
    with pytest.raises(ValueError):
        s.with_kappa(np.zeros_like(s.kappa))
    other = toy(16)
    with pytest.raises(ValueError):
        DfdSystem(s.u, other.v, s.kappa)


def test_picard_roundtrip_toy(rng):
    s = toy()
    x = s.grid.random(rng)
    assert (picard_solve(s, s.operator.apply(x)) - x).norm() <= 1e-12 * x.norm()
    assert picard_solve(s, s.grid.zeros()).norm() == 0


def test_picard_roundtrip_wvd(wvd_small):
    g = wvd_small.grid
    bump = GridFunction.from_spectrum(np.where(wvd_small.u.support, np.exp(-g.omega ** 2 / 20), 0), g)
    y = wvd_small.operator.apply(bump)
    err = (picard_solve(wvd_small, y) - bump).norm() / bump.norm()
    assert err <= 1e-6


def test_picard_divergence_guard(rng):
    s = toy(kappa=1e-8)
    y = s.grid.random(rng)
    with pytest.raises(PicardDivergenceError):
        picard_solve(s, y)


def test_stable_pseudoinverse_bound_simple():
    assert stable_pseudoinverse_bound(toy(kappa=1.0)) == pytest.approx(1.0)
    k = np.full(32, 0.5)
    k[3] = 0.1
    assert stable_pseudoinverse_bound(toy(kappa=k)) == pytest.approx(10.0)


def test_stable_pseudoinverse_bound_wvd(wvd_small, rng):
    bound = stable_pseudoinverse_bound(wvd_small)
    B_v = wvd_small.bounds("v")[1]
    # j_max = 3 so kappa_0 = 2^-6
    assert bound == pytest.approx(math.sqrt(B_v) / 2.0 ** -6, rel=1e-12)
    worst = 0.0
    for _ in range(100):
        y = wvd_small.grid.random(rng, wvd_small.v.support)
        worst = max(worst, picard_solve(wvd_small, y).norm() / y.norm())
    assert worst <= bound


def test_regularize_identity_limit(rng):
    s = toy(kappa=1.0)
    x = s.grid.random(rng)
    assert (regularize(s, tikhonov(), 1e-14, x) - x).norm() <= 1e-12 * x.norm()


def test_regularize_single_mode():
    # kappa = 0.5, alpha = 0.25, <y, v> = 1: coefficient 0.5 / (0.25 + 0.25) = 1
    s = toy(kappa=0.5)
    y = s.u.element(0)
    x = regularize(s, tikhonov(), 0.25, y)
    assert np.allclose(analysis(s.u, x).values, np.eye(len(s.kappa))[0], atol=1e-14)


def test_regularize_matches_dense_svd(rng):
    n = 32
    s = toy(n)
    g = s.grid
    F = np.fft.fft(np.eye(n), axis=0)
    K = np.linalg.inv(F) @ np.diag(s.operator.multiplier) @ F
    W, sig, Vh = np.linalg.svd(K)
    for f in (tikhonov(), spectral_cutoff()):
        for _ in range(5):
            alpha = 10 ** rng.uniform(-3, -0.5)
            y = g.random(rng)
            want = Vh.conj().T @ ((sig * f.eval(alpha, sig ** 2)) * (W.conj().T @ y.samples))
            got = regularize(s, f, alpha, y).samples
            assert np.linalg.norm(got - want) <= 1e-12 * max(np.linalg.norm(want), 1e-300)


def test_add_noise(rng):
    g = Grid(64, 1.0)
    y = g.random(rng)
    assert add_noise(y, 0.0, 1).y_delta is y
    nd = add_noise(y, 0.3, 7)
    assert abs((nd.y_delta - y).norm() - 0.3) <= 1e-14
    assert np.array_equal(nd.y_delta.samples, add_noise(y, 0.3, 7).y_delta.samples)
    mask = g.mask(hi=20)
    nd = add_noise(y, 0.3, 7, support=mask)
    assert nd.noise.in_subspace(mask)
    with pytest.raises(ValueError):
        add_noise(y, -1.0, 0)


def test_multiplier_adjoint(rng):
    g = Grid(64, 3.0)
    m = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    K = MultiplierOperator(g, m)
    x, y = g.random(rng), g.random(rng)
    assert np.isclose(K.apply(x).inner(y), x.inner(K.apply_adjoint(y)), rtol=1e-12)
