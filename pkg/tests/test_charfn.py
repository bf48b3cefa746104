import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conekit import McConfig
from conekit.charfn import (delta, delta_mc, log_phi, phi, phi_mc, section_integral, sigma,
                            sigma0, sigma0_estimate)
from conekit.cones import dual, lorentz, orthant, product, simplicial
from conekit.errors import OutsideConeError

from conftest import cones_st, points, seeds_st

MC = McConfig(samples=100_000, seed=11)
A = [[1.0, 1.0], [0.0, 1.0]]


@pytest.mark.parametrize("cone,x,expected", [
    (orthant(2), [2.0, 3.0], 6.0),
    (orthant(3), [1.0, 1.0, 1.0], 1.0),
    # area of the square 0,(1,1),(-1,1),(0,2); grid-count oracle in test_cones
    (lorentz(2), [0.0, 2.0], 2.0),
    (simplicial(A), [2.0, 1.0], 1.0),
])
def test_delta_examples(cone, x, expected):
    assert math.isclose(delta(cone, x), expected, rel_tol=1e-12)


@pytest.mark.parametrize("cone,x,expected", [
    (orthant(2), [2.0, 3.0], 6.0),
    (lorentz(2), [0.0, 2.0], 2.0),
    (simplicial(A), [2.0, 1.0], 1.0),
])
def test_delta_mc_examples(cone, x, expected):
    est = delta_mc(cone, x, MC)
    assert abs(est.value - expected) <= 3 * est.stderr + 1e-12


@pytest.mark.parametrize("cone,x,expected", [
    (orthant(2), [2.0, 3.0], 1 / 6),
    (orthant(1), [1.0], 1.0),
    (lorentz(2), [0.0, 2.0], None),
    (lorentz(2), [0.3, 1.1], None),
])
def test_phi_mc_examples(cone, x, expected):
    expected = phi(cone, x) if expected is None else expected
    assert math.isclose(phi(cone, x), expected, rel_tol=1e-12)
    est = phi_mc(cone, x, MC)
    assert abs(est.value - expected) <= 3 * est.stderr + 1e-12


def test_phi_lorentz3_homogeneity_example():
    assert math.isclose(phi(lorentz(3), [0, 0, 2.0]) / phi(lorentz(3), [0, 0, 1.0]), 2.0**-3,
                        rel_tol=1e-14)


def test_outside_point_raises():
    for fn in (delta, phi):
        with pytest.raises(OutsideConeError):
            fn(orthant(2), [1.0, -1.0])


@given(cones_st, seeds_st)
def test_homogeneity(V, seed):
    X = points(V, seed, 100)
    lam = np.exp(np.random.default_rng(seed).uniform(-3, 3, 100))
    n = V.dim
    np.testing.assert_allclose(delta(V, lam[:, None] * X), lam**n * delta(V, X), rtol=1e-10)
    np.testing.assert_allclose(phi(V, lam[:, None] * X), lam**-n * phi(V, X), rtol=1e-10)


@given(cones_st, seeds_st)
def test_product_rule_constant(V, seed):
    X = points(V, seed, 100)
    prod = phi(V, X) * delta(V, X)
    assert np.ptp(prod) / np.mean(prod) < 1e-8


@given(cones_st, seeds_st)
def test_strict_log_convexity(V, seed):
    X0, X1 = points(V, seed, 20), points(V, seed + 7, 20)
    for a, b in zip(X0, X1):
        if np.linalg.norm(a - b) < 1e-3 * np.linalg.norm(a):
            continue
        mid = log_phi(V, 0.5 * (a + b))
        assert mid < 0.5 * (log_phi(V, a) + log_phi(V, b)) + math.log1p(-1e-12)


@pytest.mark.parametrize("cone,xb,x0", [
    (orthant(2), [0.0, 1.0], [1.0, 1.0]),
    (lorentz(3), [0.6, 0.8, 1.0], [0.0, 0.0, 1.0]),
    (simplicial(A), [1.0, 1.0], [2.0, 1.0]),
])
def test_boundary_blow_up(cone, xb, x0):
    xb, x0 = np.array(xb), np.array(x0)
    t = np.logspace(-9, -1, 40)
    X = xb + t[:, None] * (x0 - xb)
    p = phi(cone, X)
    assert np.all(np.diff(p) < 0)
    assert p[0] > 1e6 * phi(cone, x0)
    d = delta(cone, X)
    assert np.all(np.diff(d) > 0) and d[0] < 1e-6 * delta(cone, x0)


@pytest.mark.parametrize("matrix", [[[1.0, 0.5], [0.0, 1.0]], [[2.0, -0.3], [0.4, 1.0]]])
def test_transformation_law_against_mc(matrix):
    Am = np.array(matrix)
    V = simplicial(Am)
    x = np.array([1.0, 1.0])
    assert math.isclose(phi(V, Am @ x), phi(orthant(2), x) / abs(np.linalg.det(Am)), rel_tol=1e-12)
    est = phi_mc(V, Am @ x, MC)
    assert abs(est.value - phi(V, Am @ x)) <= 4 * est.stderr


@pytest.mark.parametrize("cone", [orthant(2), lorentz(3), simplicial(A),
                                  product(orthant(1), lorentz(2))])
def test_closed_form_vs_mc_random_points(cone):
    X = points(cone, 3, 5)
    mc = McConfig(samples=20_000, seed=4)
    for x in X:
        for exact, est in ((phi(cone, x), phi_mc(cone, x, mc)), (delta(cone, x), delta_mc(cone, x, mc))):
            assert abs(est.value - exact) <= 4 * est.stderr + 1e-12 * exact


@pytest.mark.parametrize("cone,s0,s", [
    (orthant(2), -1.0, -1.0),
    (lorentz(3), -2 / 3, -2 / 3),
    (lorentz(4), -0.5, -0.5),
    (simplicial(A), -1.0, -1.0),
    (orthant(1), -math.inf, -1.0),
    (product(orthant(1), lorentz(3)), -2 / 3, -2 / 3),
])
def test_sigma0_closed_forms(cone, s0, s):
    rep = sigma0(cone)
    assert rep.sigma0 == pytest.approx(s0) and rep.sigma == pytest.approx(s) == sigma(cone)
    assert rep.sigma >= -1 and rep.sigma >= rep.sigma0
    assert rep.method == "closed_form"


def test_sigma_report_serialises_infinity():
    assert sigma0(orthant(1)).to_dict()["sigma0"] == "-inf"


@pytest.mark.parametrize("cone", [orthant(2), lorentz(3)])
def test_alpha_zero_is_convergent(cone):
    rep = sigma0_estimate(cone, [0.0], McConfig(samples=20_000, seed=1))
    assert not rep.classes[0].divergent and rep.one_sided


def test_alpha_zero_section_integral_is_section_area():
    # orthant(2): the quarter arc has length pi/2 and delta^0 = 1
    est = section_integral(orthant(2), 0.0, McConfig(samples=50_000, seed=2), 1e-12)
    assert abs(est.value - math.pi / 2) < 4 * est.stderr + 1e-9


def test_sigma_bracket_orthant2_small_budget():
    grid = np.round(np.arange(-1.5, -0.45, 0.1), 10)
    rep = sigma0_estimate(orthant(2), grid, McConfig(samples=50_000, seed=3))
    assert rep.contains(-1.0)
    assert rep.bracket[1] - rep.bracket[0] <= 0.2 + 1e-9


def test_sigma0_estimate_needs_grid():
    with pytest.raises(ValueError):
        sigma0_estimate(orthant(2), [], MC)
