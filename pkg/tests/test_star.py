import math

import numpy as np
import pytest
from hypothesis import given

from conekit.cones import cone_less, contains, dual, lorentz, orthant, product, simplicial
from conekit.errors import StencilError
from conekit.star import (duality_products, fixed_point, jacobian_K, star, star_fd,
                          star_fd_result, star_points)
from conekit.charfn import delta

from conftest import cones_st, points, seeds_st

# lorentz(3): delta*delta(x*) = 27 pi^2 / 144 and phi*phi(x*) = 4 pi^2 / 27, from the
# closed forms at x = e_3 where x* = 3 e_3
LORENTZ3_DELTA_PRODUCT = 27 * math.pi**2 / 144
LORENTZ3_PHI_PRODUCT = 4 * math.pi**2 / 27


@pytest.mark.parametrize("cone,x,expected", [
    (orthant(2), [2.0, 3.0], [0.5, 1 / 3]),
    (lorentz(3), [0.0, 0.0, 2.0], [0.0, 0.0, 1.5]),
])
def test_star_examples(cone, x, expected):
    np.testing.assert_allclose(star(cone, x).x_star, expected, rtol=1e-14)
    np.testing.assert_allclose(star_fd(cone, x, 1e-5), expected, atol=1e-7)


def test_star_simplicial_transformation_oracle():
    Am = np.array([[1.0, 0.4], [-0.2, 1.0]])
    V = simplicial(Am)
    for x in points(V, 5, 10):
        oracle = np.linalg.inv(Am).T @ (1.0 / np.linalg.solve(Am, x))
        np.testing.assert_allclose(star(V, x).x_star, oracle, rtol=1e-12)
        np.testing.assert_allclose(star_fd(V, x), oracle, rtol=1e-6)


@given(cones_st, seeds_st)
def test_euler_identity(V, seed):
    for x in points(V, seed, 10):
        assert star(V, x).residual_euler < 1e-10
        assert star_fd_result(V, x).residual_euler < 1e-6


@given(cones_st, seeds_st)
def test_involution_and_range(V, seed):
    X = points(V, seed, 100)
    S = star_points(V, X)
    assert np.all(contains(dual(V), S))
    back = star_points(dual(V), S)
    assert np.max(np.abs(back - X) / np.maximum(1, np.abs(X))) < 1e-8


@given(cones_st, seeds_st)
def test_duality_constants(V, seed):
    d, p = duality_products(V, points(V, seed, 100))
    assert np.ptp(d) / np.mean(d) < 1e-8
    assert np.ptp(p) / np.mean(p) < 1e-8


def test_duality_constant_values():
    x = np.array([[0.0, 0.0, 1.0], [0.3, -0.2, 2.0]])
    d, p = duality_products(lorentz(3), x)
    np.testing.assert_allclose(d, LORENTZ3_DELTA_PRODUCT, rtol=1e-10)
    np.testing.assert_allclose(p, LORENTZ3_PHI_PRODUCT, rtol=1e-10)
    d, p = duality_products(orthant(3), [[1.0, 2.0, 3.0]])
    np.testing.assert_allclose([d[0], p[0]], [1.0, 1.0], rtol=1e-14)


def test_jacobian_example():
    np.testing.assert_allclose(jacobian_K(orthant(2), [2.0, 3.0]), np.diag([0.25, 1 / 9]))


@pytest.mark.parametrize("cone", [lorentz(3), lorentz(4), simplicial([[1.0, 0.5], [0.0, 1.0]]),
                                  product(orthant(1), lorentz(2))])
def test_jacobian_symmetric_positive_and_determinant_law(cone):
    X = points(cone, 9, 30)
    dets = []
    for x in X:
        K = jacobian_K(cone, x)
        assert np.max(np.abs(K - K.T)) < 1e-6 * max(1.0, np.max(np.abs(K)))
        assert np.min(np.linalg.eigvalsh(0.5 * (K + K.T))) > 0
        dets.append(np.linalg.det(K) * delta(cone, x) ** 2)
    dets = np.array(dets)
    assert np.ptp(dets) / np.mean(dets) < 1e-4


@pytest.mark.parametrize("cone,expected", [
    (orthant(3), [1.0, 1.0, 1.0]),
    (lorentz(3), [0.0, 0.0, math.sqrt(3)]),
    (product(orthant(1), orthant(1)), [1.0, 1.0]),
    (lorentz(2), [0.0, math.sqrt(2)]),
])
def test_fixed_point_examples(cone, expected):
    x = fixed_point(cone)
    np.testing.assert_allclose(x, expected, atol=1e-8)
    np.testing.assert_allclose(star(cone, x).x_star, x, atol=1e-8)


def test_fixed_point_requires_self_dual():
    with pytest.raises(ValueError):
        fixed_point(simplicial([[1.0, 0.5], [0.0, 1.0]]))


@pytest.mark.parametrize("cone", [orthant(3), lorentz(3), lorentz(4)])
def test_order_reversal_on_self_dual_cones(cone):
    rng = np.random.default_rng(3)
    X = points(cone, 4, 100)
    Z = X + points(cone, 5, 100) * rng.uniform(0.01, 2, (100, 1))
    for x, z in zip(X, Z):
        assert cone_less(cone, x, z)
        assert cone_less(cone, star(cone, z).x_star, star(cone, x).x_star)


def test_near_boundary_guard():
    with pytest.raises(StencilError):
        star(orthant(2), [1e-7, 1.0])
    with pytest.raises(StencilError):
        star_fd(lorentz(2), [0.0, 1.0], h=0.2)
