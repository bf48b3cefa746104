import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize, stats

from conekit import cones
from conekit.cones import (boundary_distance, cone_less, contains, contains_closure, dual,
                           from_json, in_interval, interval_box, lorentz, orthant, parse_cone,
                           product, sample_interval, sample_intervals, sample_section, simplicial,
                           to_json)
from conekit.errors import (ConstructionError, DimensionError, NonFiniteError, OutsideConeError,
                            RejectionBudgetExhausted)

from conftest import cones_st, points, seeds_st

# (1-cos(pi/4))/2, the spherical cap x_3 > |x'|
LORENTZ3_SECTION_FRACTION = 0.14644660940672627


# ---------------------------------------------------------------- construction

def test_constructor_guards():
    with pytest.raises(ConstructionError):
        orthant(0)
    with pytest.raises(ConstructionError):
        lorentz(1)
    with pytest.raises(ConstructionError, match="eps_det"):
        simplicial([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(ConstructionError):
        simplicial([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def test_product_dimension_is_sum():
    P = product(orthant(2), lorentz(3))
    assert P.dim == 5 and [b.stop - b.start for b in P.blocks] == [2, 3]


@pytest.mark.parametrize("text,dim", [("orthant(3)", 3), ("lorentz(2)", 2),
                                      ("product(orthant(1), lorentz(3))", 4)])
def test_parse_cone(text, dim):
    assert parse_cone(text).dim == dim


@given(cones_st)
def test_json_round_trip(V):
    assert from_json(to_json(V)) == V


# ---------------------------------------------------------------- membership

@pytest.mark.parametrize("cone,x,expected", [
    (orthant(2), [1.0, 2.0], True),
    (lorentz(3), [0.0, 0.0, -1.0], False),
    # A^-1 (1,1) = (0,1) lies on a facet, so the open cone excludes it
    (simplicial([[1.0, 1.0], [0.0, 1.0]]), [1.0, 1.0], False),
    (simplicial([[1.0, 1.0], [0.0, 1.0]]), [2.0, 1.0], True),
])
def test_contains_examples(cone, x, expected):
    assert bool(contains(cone, x)) is expected


def test_simplicial_example_by_linear_solve():
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    assert np.allclose(np.linalg.solve(A, [1.0, 1.0]), [0.0, 1.0])
    assert contains_closure(simplicial(A), [1.0, 1.0])


def test_contains_errors():
    with pytest.raises(DimensionError):
        contains(orthant(2), [1.0, 2.0, 3.0])
    with pytest.raises(NonFiniteError):
        contains(orthant(2), [1.0, np.nan])


@given(cones_st, seeds_st)
def test_cone_axioms(V, seed):
    rng = np.random.default_rng(seed)
    X = points(V, seed, 50)
    Y = points(V, seed + 1, 50)
    lam = np.exp(3 * rng.standard_normal(50))[:, None]
    assert np.all(contains(V, X))
    assert np.all(contains(V, lam * X))
    assert np.all(contains(V, X + Y))
    assert not np.any(contains(V, -X))


# ---------------------------------------------------------------- duality

def test_dual_examples():
    assert dual(orthant(3)) == orthant(3)
    assert dual(lorentz(4)) == lorentz(4)
    D = dual(simplicial([[2.0, 0.0], [0.0, 1.0]]))
    assert np.allclose(D.A, [[0.5, 0.0], [0.0, 1.0]])


@given(cones_st, seeds_st)
def test_dual_involution_by_membership(V, seed):
    P = np.random.default_rng(seed).standard_normal((1000, V.dim))
    assert np.array_equal(contains(V, P), contains(dual(dual(V)), P))


@given(cones_st, seeds_st)
def test_dual_pairing_positive(V, seed):
    X = points(dual(V), seed, 100)
    Y = points(V, seed + 1, 100)
    assert np.all(np.sum(X * Y, axis=1) > 0)


# ---------------------------------------------------------------- boundary distance

def test_boundary_distance_examples():
    assert boundary_distance(orthant(2), [3.0, 1.0]) == 1.0
    assert boundary_distance(orthant(1), [5.0]) == 5.0
    # oracle: minimise the distance from (0,1) to the ray t(1,1)/sqrt(2)
    res = optimize.minimize_scalar(lambda t: np.hypot(t / np.sqrt(2), 1 - t / np.sqrt(2)))
    assert math.isclose(res.fun, 1 / np.sqrt(2), rel_tol=1e-9)
    assert math.isclose(boundary_distance(lorentz(2), [0.0, 1.0]), 1 / np.sqrt(2), rel_tol=1e-12)


def test_boundary_distance_outside_raises():
    with pytest.raises(OutsideConeError):
        boundary_distance(orthant(2), [1.0, -1.0])


@given(cones_st, seeds_st)
def test_boundary_distance_lower_bounds_section_pairing(V, seed):
    rng = np.random.default_rng(seed)
    X = points(V, seed, 100)
    S = sample_section(dual(V), rng, 100)
    assert np.all(np.sum(X * S, axis=1) >= boundary_distance(V, X) - 1e-9)


@given(cones_st, seeds_st)
def test_boundary_distance_is_a_ball_radius(V, seed):
    rng = np.random.default_rng(seed)
    X = points(V, seed, 20)
    d = boundary_distance(V, X)
    U = cones.sphere(rng, 20, V.dim)
    assert np.all(contains(V, X + 0.999 * d[:, None] * U))


# ---------------------------------------------------------------- order and intervals

@pytest.mark.parametrize("cone,x,y,expected", [
    (orthant(2), [1, 1], [2, 3], True),
    (orthant(2), [1, 1], [2, 0.5], False),
    (lorentz(3), [0, 0, 0], [0, 0, 1], True),
])
def test_cone_less_examples(cone, x, y, expected):
    assert bool(cone_less(cone, np.array(x, float), np.array(y, float))) is expected


@pytest.mark.parametrize("cone,b,x,expected", [
    (orthant(2), [1, 1], [0.5, 0.5], True),
    (orthant(2), [1, 1], [0.5, 1.5], False),
    (lorentz(2), [0, 2], [0.5, 1], True),
])
def test_in_interval_examples(cone, b, x, expected):
    zero = np.zeros(cone.dim)
    assert bool(in_interval(cone, zero, np.array(b, float), np.array(x, float))) is expected


def test_lorentz2_interval_area_by_grid_count():
    g = (np.arange(2000) + 0.5) / 1000.0
    X, Y = np.meshgrid(g - 1.0, g)
    P = np.column_stack([X.ravel(), Y.ravel()])
    inside = contains(lorentz(2), P) & contains(lorentz(2), np.array([0.0, 2.0]) - P)
    assert abs(inside.mean() * 4.0 - 2.0) < 5e-3


def test_orthant_interval_mean():
    Y = sample_interval(orthant(2), [1.0, 1.0], np.random.default_rng(0), 100_000)
    se = np.std(Y, axis=0) / np.sqrt(len(Y))
    assert np.all(np.abs(Y.mean(axis=0) - 0.5) < 3 * se)


def test_lorentz2_rejection_acceptance():
    _, acc = sample_interval(lorentz(2), [0.0, 2.0], np.random.default_rng(1), 50_000,
                             method="rejection", return_acceptance=True)
    assert abs(acc - 0.5) < 0.01


def test_interval_sampling_rejects_outside_endpoint():
    with pytest.raises(OutsideConeError):
        sample_interval(orthant(2), [1.0, -1.0], np.random.default_rng(0))


def test_rejection_budget_exhaustion():
    with pytest.raises(RejectionBudgetExhausted):
        sample_interval(lorentz(3), [0.0, 0.0, 1.0], np.random.default_rng(0), 100,
                        method="rejection", max_rejections=1)


@given(cones_st, seeds_st)
def test_interval_samples_inside_interval_and_box(V, seed):
    rng = np.random.default_rng(seed)
    x = points(V, seed, 1)[0]
    Y = sample_intervals(V, x, rng, 500)[0]
    assert np.all(in_interval(V, np.zeros(V.dim), x, Y))
    lo, hi = interval_box(V, x)
    assert np.all((Y >= lo - 1e-12) & (Y <= hi + 1e-12))


@pytest.mark.parametrize("cone,x", [
    (lorentz(2), [0.3, 1.0]),
    (lorentz(3), [0.2, -0.4, 1.2]),
    (lorentz(4), [0.1, 0.2, 0.3, 1.0]),
    (simplicial([[1.0, 0.4], [0.2, 1.0]]), [1.0, 2.0]),
    (product(orthant(1), lorentz(2)), [1.0, 0.2, 1.0]),
])
def test_exact_sampler_matches_rejection(cone, x):
    # two-sample KS on every coordinate and on the projection onto x
    rng = np.random.default_rng(5)
    x = np.array(x)
    exact = sample_interval(cone, x, rng, 4000)
    rej = sample_interval(cone, x, rng, 4000, method="rejection")
    for j in range(cone.dim):
        assert stats.ks_2samp(exact[:, j], rej[:, j]).pvalue > 1e-3
    assert stats.ks_2samp(exact @ x, rej @ x).pvalue > 1e-3


# ---------------------------------------------------------------- sections

@pytest.mark.parametrize("cone,expected,tol", [
    (orthant(2), 0.25, 0.01),
    (lorentz(3), LORENTZ3_SECTION_FRACTION, 0.005),
])
def test_section_acceptance(cone, expected, tol):
    T, acc = sample_section(cone, np.random.default_rng(2), 20_000, return_acceptance=True)
    assert abs(acc - expected) < tol
    assert np.all(np.abs(np.linalg.norm(T, axis=1) - 1.0) < 1e-12)
    assert np.all(contains(cone, T))


def test_lorentz3_cap_fraction_oracle():
    assert math.isclose((1 - math.cos(math.pi / 4)) / 2, LORENTZ3_SECTION_FRACTION, rel_tol=1e-15)
