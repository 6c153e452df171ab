import math

import numpy as np
import pytest

import thermoplate as tp


def test_roots():
    r = tp.characteristic_roots()
    assert r.gamma1 == pytest.approx(0.56984029099805333, rel=1e-14)
    assert r.theta0 == pytest.approx(1.7338772109868403, rel=1e-14)
    assert r.max_residual() < 1e-13


def test_symbol_and_resolvent():
    a = tp.symbol_matrix(2.0)
    assert a.shape == (3, 3)
    assert a[1, 0] == -4.0
    lam = 1.0 + 2.0j
    r = tp.resolvent_matrix(2.0, lam)
    np.testing.assert_allclose(r @ (lam * np.eye(3) - a), np.eye(3), atol=1e-12)
    d = tp.determinant(2.0, lam)
    assert d == pytest.approx(np.linalg.det(lam * np.eye(3) - a), rel=1e-12)
    with pytest.raises(ArithmeticError):
        tp.resolvent_matrix(0.0, 0.0)


def test_witness_and_scan():
    assert tp.nonsectoriality_witness(10.0) == pytest.approx(20.2, rel=1e-12)
    with pytest.raises(ValueError):
        tp.nonsectoriality_witness(-1.0)
    rep = tp.multiplier_order_scan(lambda xi, lam: lam / (lam + sum(x * x for x in xi)),
                                   0.0, dimension=1, max_alpha=1)
    assert rep.pass_


def test_torus_evolution():
    g = tp.TorusGrid.cube(1, 64, 2 * math.pi)
    u = tp.random_smooth_state(g, seed=5)
    assert u.shape == (3, 64)
    half = tp.evolve(g, tp.evolve(g, u, 0.3), 0.4)
    full = tp.evolve(g, u, 0.7)
    np.testing.assert_allclose(half, full, atol=1e-10)
    assert 0 < tp.e_norm(g, full, 0) < tp.e_norm(g, u, 0)


def test_bounded_domain():
    gen = tp.assemble_generator("interval", [30], "free", beta=0.5)
    assert gen.size() == 93
    spec = tp.spectrum(gen)
    assert spec.kernel_dimension == 3
    assert spec.max_real_part <= spec.zero_tol
    dec = tp.decay_rate_experiment(gen, samples=1)
    assert dec.pass_
    with pytest.raises(ValueError):
        tp.assemble_generator("torus", [30])


def test_config_roundtrip():
    text = tp.parse_config("grid = 24, 24\nbc = lt\n")
    assert "bc = lt" in text
    assert tp.parse_config(text) == text
    assert len(tp.config_keys()) == 25
    with pytest.raises(ValueError):
        tp.parse_config("nonsense = 1\n")
