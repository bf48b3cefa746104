"""Invariant suite run by ``conekit selftest`` at a reduced Monte Carlo budget.

Each check is a function of an :class:`~conekit.mc.McConfig` that raises
``AssertionError`` on failure.  :func:`run_selftest` times every check and
:func:`write_junit` emits a JUnit-style XML summary.
"""
from __future__ import annotations

import math
import time
import traceback
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import calibration, charfn, cones, functions, harness, operators, star
from .mc import McConfig, map_chunks, stream_rng

SELFTEST_SAMPLES = 100_000


def builtin_cones() -> list[cones.ConeModel]:
    rng = stream_rng(0, "selftest-simplicial", 0)
    A = np.eye(2) + 0.4 * rng.random((2, 2))
    return [cones.orthant(2), cones.orthant(3), cones.lorentz(2), cones.lorentz(3),
            cones.simplicial(A), cones.product(cones.orthant(1), cones.lorentz(2))]


def self_dual_cones() -> list[cones.ConeModel]:
    return [cones.orthant(2), cones.orthant(3), cones.lorentz(3), cones.lorentz(4)]


def _rng(name: str) -> np.random.Generator:
    return stream_rng(0, ("selftest", name), 0)


def _spread(values) -> float:
    v = np.asarray(values, dtype=float)
    return float((v.max() - v.min()) / abs(v.mean()))


# ---------------------------------------------------------------- cone-core

def check_cone_axioms(mc: McConfig) -> None:
    rng = _rng("axioms")
    for V in builtin_cones():
        X = cones.random_points(V, rng, 200)
        Y = cones.random_points(V, rng, 200)
        lam = np.exp(rng.standard_normal(200))[:, None]
        assert np.all(cones.contains(V, X)), V.label
        assert np.all(cones.contains(V, lam * X)), f"{V.label} not closed under scaling"
        assert np.all(cones.contains(V, X + Y)), f"{V.label} not closed under addition"
        assert not np.any(cones.contains(V, -X)), f"{V.label} contains a line"


def check_dual_involution(mc: McConfig) -> None:
    rng = _rng("involution")
    for _ in range(20):
        A = np.eye(3) + 0.5 * rng.standard_normal((3, 3))
        if abs(np.linalg.det(A)) < 0.1:
            continue
        V = cones.simplicial(A)
        P = rng.standard_normal((1000, 3))
        assert np.array_equal(cones.contains(V, P), cones.contains(cones.dual(cones.dual(V)), P))


def check_dual_pairing(mc: McConfig) -> None:
    rng = _rng("pairing")
    for V in builtin_cones():
        X = cones.random_points(cones.dual(V), rng, 200)
        Y = cones.random_points(V, rng, 200)
        assert np.all(np.sum(X * Y, axis=1) > 0), V.label


def check_boundary_distance(mc: McConfig) -> None:
    rng = _rng("boundary")
    for V in builtin_cones():
        X = cones.random_points(V, rng, 200)
        S = cones.sample_section(cones.dual(V), rng, 200)
        d = cones.boundary_distance(V, X)
        assert np.all(np.sum(X * S, axis=1) >= d - 1e-9), V.label


def check_order_reversal(mc: McConfig) -> None:
    rng = _rng("order")
    for V in self_dual_cones():
        X = cones.random_points(V, rng, 100)
        Z = X + cones.random_points(V, rng, 100)
        assert np.all(cones.cone_less(V, X, Z))
        assert np.all(cones.cone_less(V, star.star_points(V, Z), star.star_points(V, X))), V.label


def check_stream_determinism(mc: McConfig) -> None:
    def fn(rng, m, i):
        return rng.random(m).sum()
    serial = map_chunks(fn, mc, "determinism", samples=8 * mc.chunk)
    threaded = map_chunks(fn, McConfig(mc.samples, mc.seed, mc.chunk, threads=4), "determinism",
                          samples=8 * mc.chunk)
    assert serial == threaded


# ---------------------------------------------------------------- char-fn

def check_homogeneity(mc: McConfig) -> None:
    rng = _rng("homogeneity")
    for V in builtin_cones():
        X = cones.random_points(V, rng, 100)
        lam = np.exp(rng.standard_normal(100))
        n = V.dim
        d0, d1 = charfn.delta(V, X), charfn.delta(V, lam[:, None] * X)
        p0, p1 = charfn.phi(V, X), charfn.phi(V, lam[:, None] * X)
        assert np.allclose(d1, lam**n * d0, rtol=1e-10, atol=0), V.label
        assert np.allclose(p1, lam**-n * p0, rtol=1e-10, atol=0), V.label


def check_closed_vs_mc(mc: McConfig) -> None:
    rng = _rng("closed-vs-mc")
    for V in builtin_cones():
        for x in cones.random_points(V, rng, 3, spread=0.3):
            for closed, est in ((charfn.delta(V, x), charfn.delta_mc(V, x, mc)),
                                (charfn.phi(V, x), charfn.phi_mc(V, x, mc))):
                assert abs(closed - est.value) <= 4 * est.stderr + 1e-12 * closed, (V.label, x, closed, est)


def check_product_rule(mc: McConfig) -> None:
    rng = _rng("product-rule")
    for V in builtin_cones():
        X = cones.random_points(V, rng, 100)
        assert _spread(charfn.phi(V, X) * charfn.delta(V, X)) < 1e-8, V.label


def check_log_convexity(mc: McConfig) -> None:
    rng = _rng("log-convexity")
    for V in builtin_cones():
        X0 = cones.random_points(V, rng, 100)
        X1 = cones.random_points(V, rng, 100)
        mid = charfn.log_phi(V, 0.5 * (X0 + X1))
        avg = 0.5 * (charfn.log_phi(V, X0) + charfn.log_phi(V, X1))
        far = np.linalg.norm(X0 - X1, axis=1) > 1e-6
        assert np.all(mid[far] < avg[far] + math.log1p(-1e-12)), V.label


def check_sigma_bracket(mc: McConfig) -> None:
    V = cones.orthant(2)
    grid = np.round(np.linspace(-1.6, -0.4, 7), 10)
    rep = charfn.sigma0_estimate(V, grid, mc.with_samples(min(mc.samples, 20_000)))
    assert rep.contains(-1.0), rep.bracket


def check_calibration(mc: McConfig) -> None:
    for n in (2, 3):
        for which in ("delta", "phi"):
            cached = calibration.lorentz_constant(n, which)
            fresh = (calibration._quad_delta if which == "delta" else calibration._quad_phi)(n)[0]
            assert math.isclose(cached, fresh, rel_tol=1e-10), (n, which)


# ---------------------------------------------------------------- star-map

def check_star_involution(mc: McConfig) -> None:
    rng = _rng("star-involution")
    for V in builtin_cones():
        X = cones.random_points(V, rng, 100)
        back = star.star_points(cones.dual(V), star.star_points(V, X))
        assert np.max(np.linalg.norm(back - X, axis=1)) < 1e-8, V.label


def check_euler(mc: McConfig) -> None:
    rng = _rng("euler")
    for V in builtin_cones():
        X = cones.random_points(V, rng, 20)
        S = star.star_points(V, X)
        assert np.max(np.abs(np.sum(S * X, axis=1) - V.dim)) < 1e-10, V.label
        for x in X[:5]:
            assert abs(star.star_fd(V, x) @ x - V.dim) < 1e-6, V.label


def check_duality_constants(mc: McConfig) -> None:
    rng = _rng("duality")
    for V in builtin_cones():
        X = cones.random_points(V, rng, 100)
        dd, pp = star.duality_products(V, X)
        assert _spread(dd) < 1e-8 and _spread(pp) < 1e-8, V.label
        dets = [np.linalg.det(star.jacobian_K(V, x)) * charfn.delta(V, x) ** 2 for x in X[:20]]
        assert _spread(dets) < 1e-4, V.label


def check_star_range(mc: McConfig) -> None:
    rng = _rng("range")
    for V in builtin_cones():
        X = cones.random_points(V, rng, 100, spread=1.5)
        assert np.all(cones.contains(cones.dual(V), star.star_points(V, X))), V.label


def check_jacobian(mc: McConfig) -> None:
    rng = _rng("jacobian")
    for V in (cones.lorentz(3), cones.lorentz(4)):
        for x in cones.random_points(V, rng, 10):
            K = star.jacobian_K(V, x)
            assert np.max(np.abs(K - K.T)) < 1e-6 * max(1.0, np.max(np.abs(K)))
            assert np.min(np.linalg.eigvalsh(0.5 * (K + K.T))) > 0


def check_fixed_point(mc: McConfig) -> None:
    for V in self_dual_cones():
        x = star.fixed_point(V)
        tol = 1e-8 if V.kind == "orthant" else 1e-6
        assert np.linalg.norm(star.star_points(V, x) - x) < tol, V.label


# ---------------------------------------------------------------- operators

def check_kernel_homogeneity(mc: McConfig) -> None:
    rng = _rng("kernel-homogeneity")
    V = cones.orthant(2)
    for k in (operators.hardy_kernel(), operators.laplace_kernel(), operators.rl_kernel(1.7),
              operators.weyl_kernel(1.7)):
        X = cones.random_points(V, rng, 50)
        Y = cones.random_points(V, rng, 50)
        a = np.exp(rng.standard_normal(2))
        det = float(np.prod(a))
        assert np.allclose(k.eval(V, X * a, Y * a), det**k.beta * k.eval(V, X, Y), rtol=1e-10), k.name


def check_operator_homogeneity(mc: McConfig) -> None:
    V = cones.orthant(2)
    f = functions.delta_power(V, 0.5)
    x = np.array([1.0, 2.0])
    a = np.array([2.0, 0.5])
    for k in (operators.hardy_kernel(), operators.laplace_kernel(), operators.rl_kernel(1.5)):
        base = operators.apply_kernel(V, k, f, x, mc)
        moved = operators.apply_kernel(V, k, f, a * x, mc)
        scale = float(np.prod(a)) ** (0.5 + k.beta + 1.0)
        se = math.hypot(moved.stderr, scale * base.stderr)
        assert abs(moved.value - scale * base.value) <= 4 * se + 1e-12, k.name


def check_hardy_monotone(mc: McConfig) -> None:
    rng = _rng("hardy-monotone")
    V = cones.lorentz(3)
    f = functions.exp_damped_power(V, 0.0, 1.0)
    X = cones.random_points(V, rng, 3)
    for x in X:
        y = x + cones.random_points(V, rng, 1)[0]
        hx, hy = operators.hardy(V, f, x, mc), operators.hardy(V, f, y, mc)
        assert hx.value <= hy.value + 4 * math.hypot(hx.stderr, hy.stderr)


def check_r1_is_hardy(mc: McConfig) -> None:
    rng = _rng("r1")
    V = cones.orthant(2)
    f = functions.exp_damped_power(V, 0.5, 1.0)
    for x in cones.random_points(V, rng, 3):
        r1 = operators.riemann_liouville(V, 1.0, f, x, mc)
        h = operators.hardy(V, f, x, mc)
        assert abs(r1.value - h.value) <= 3 * math.hypot(r1.stderr, h.stderr) + 1e-12


def check_linearity(mc: McConfig) -> None:
    V = cones.lorentz(3)
    f = functions.exp_damped_power(V, 0.5, 1.0)
    X = cones.random_points(V, _rng("linearity"), 10)
    for k in (operators.hardy_kernel(), operators.laplace_kernel()):
        w1 = operators.kernel_weights(V, k, f, X, stream_rng(1, "lin", 0), 100).mean(axis=1)
        w2 = operators.kernel_weights(V, k, functions.scaled(f, 3.0), X, stream_rng(1, "lin", 0), 100).mean(axis=1)
        assert np.allclose(w2, 3.0 * w1, rtol=1e-12, atol=0), k.name


def check_fubini(mc: McConfig) -> None:
    V = cones.orthant(1)
    f = functions.exp_damped_power(V, 0.0, 1.0)
    g = functions.indicator_interval(V, [1.0])
    lhs, rhs = operators.fubini_duality_check(V, 1.5, f, g, mc)
    assert abs(lhs.value - rhs.value) <= 4 * math.hypot(lhs.stderr, rhs.stderr)


def check_operator_examples(mc: McConfig) -> None:
    V = cones.orthant(1)
    rl = operators.riemann_liouville(V, 2.0, functions.constant(V), [3.0], mc)
    assert abs(rl.value - 4.5) <= 3 * rl.stderr + 1e-9
    w = operators.weyl(V, 1.0, functions.exp_damped_power(V, 0.0, 1.0), [1.0], mc)
    assert abs(w.value - math.exp(-1)) <= 3 * w.stderr + 1e-9


# ---------------------------------------------------------------- harness

def check_hardy1d_ratio(mc: McConfig) -> None:
    f = functions.indicator_interval(cones.orthant(1), [1.0])
    rep = harness.verify(harness.hardy1d_case(), [f], mc)
    assert rep.verdict == "consistent"
    assert abs(rep.per_function[0].ratio ** 2 / 2.0 - 1.0) < 0.03, rep.per_function[0].ratio


def check_bradley_consistency(mc: McConfig) -> None:
    for g in np.linspace(-1.5, 2.5, 20):
        finite = math.isfinite(harness.bradley_constant(*harness.hardy1d_weights(g, 2.0, 2.0), 2.0, 2.0))
        assert finite == harness.check_conditions(harness.hardy1d_case(g)).satisfied, g


def check_one_d_reduction(mc: McConfig) -> None:
    V = cones.orthant(1)
    for p in (1.0, 1.5, 2.0, 3.0):
        for g in np.linspace(-1.0, 3.0, 17):
            rep = harness.check_conditions(harness.InequalityCase("T3.13a", V, p=p, q=p, gamma=g, r=1.0))
            assert rep.satisfied == (g < p - 1.0), (p, g)


def check_condition_monotonicity(mc: McConfig) -> None:
    for V in builtin_cones():
        for t in ("T3.3", "T3.13a", "T3.15a", "C3.1"):
            m0 = harness.check_conditions(harness.InequalityCase(t, V, gamma=0.0, r=1.5)).margin
            m1 = harness.check_conditions(harness.InequalityCase(t, V, gamma=1.0, r=1.5)).margin
            assert math.isclose(m0 - m1, 1.0), (t, V.label)
        m0 = harness.check_conditions(harness.InequalityCase("T3.14a", V, gamma=0.0, r=1.5)).margin
        m1 = harness.check_conditions(harness.InequalityCase("T3.14a", V, gamma=1.0, r=1.5)).margin
        assert math.isclose(m1 - m0, 1.0), V.label


def check_scale_invariance(mc: McConfig) -> None:
    V = cones.orthant(2)
    case = harness.InequalityCase("T3.3", V)
    f = harness.default_family(case)[1]
    a = harness.verify(case, [f], mc).per_function[0].ratio
    b = harness.verify(case, [functions.scaled(f, 7.0)], mc).per_function[0].ratio
    assert math.isclose(a, b, rel_tol=1e-12), (a, b)


def check_automorphism_invariance(mc: McConfig) -> None:
    V = cones.orthant(2)
    case = harness.InequalityCase("T3.3", V)
    f = harness.default_family(case)[1]
    g = functions.composed(f, np.diag([3.0, 0.5]))
    a = harness.verify(case, [f], mc).per_function[0]
    b = harness.verify(case, [g], mc).per_function[0]
    se = math.hypot(a.lhs.stderr / a.rhs.value, b.lhs.stderr / b.rhs.value)
    assert abs(a.ratio - b.ratio) <= 4 * se, (a.ratio, b.ratio)


@dataclass(frozen=True)
class Check:
    id: str
    fn: Callable[[McConfig], None]


CHECKS = (
    Check("cone-core.axioms", check_cone_axioms),
    Check("cone-core.dual_involution", check_dual_involution),
    Check("cone-core.dual_pairing", check_dual_pairing),
    Check("cone-core.boundary_distance", check_boundary_distance),
    Check("cone-core.order_reversal", check_order_reversal),
    Check("cone-core.stream_determinism", check_stream_determinism),
    Check("char-fn.homogeneity", check_homogeneity),
    Check("char-fn.closed_vs_mc", check_closed_vs_mc),
    Check("char-fn.product_rule", check_product_rule),
    Check("char-fn.log_convexity", check_log_convexity),
    Check("char-fn.sigma_bracket", check_sigma_bracket),
    Check("char-fn.calibration", check_calibration),
    Check("star-map.involution", check_star_involution),
    Check("star-map.euler", check_euler),
    Check("star-map.duality_constants", check_duality_constants),
    Check("star-map.range", check_star_range),
    Check("star-map.jacobian", check_jacobian),
    Check("star-map.fixed_point", check_fixed_point),
    Check("operators.kernel_homogeneity", check_kernel_homogeneity),
    Check("operators.operator_homogeneity", check_operator_homogeneity),
    Check("operators.hardy_monotone", check_hardy_monotone),
    Check("operators.r1_is_hardy", check_r1_is_hardy),
    Check("operators.linearity", check_linearity),
    Check("operators.fubini", check_fubini),
    Check("operators.examples", check_operator_examples),
    Check("harness.hardy1d_ratio", check_hardy1d_ratio),
    Check("harness.bradley_consistency", check_bradley_consistency),
    Check("harness.one_d_reduction", check_one_d_reduction),
    Check("harness.condition_monotonicity", check_condition_monotonicity),
    Check("harness.scale_invariance", check_scale_invariance),
    Check("harness.automorphism_invariance", check_automorphism_invariance),
)


@dataclass(frozen=True)
class CheckResult:
    id: str
    passed: bool
    seconds: float
    message: str = ""


def run_selftest(mc: McConfig | None = None, checks=CHECKS, log=None) -> list[CheckResult]:
    """Run every check; failures are captured, never raised."""
    mc = McConfig(samples=SELFTEST_SAMPLES) if mc is None else mc
    out = []
    for check in checks:
        t0 = time.perf_counter()
        try:
            check.fn(mc)
            res = CheckResult(check.id, True, time.perf_counter() - t0)
        except Exception as exc:  # a failing invariant must not stop the suite
            msg = f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"
            res = CheckResult(check.id, False, time.perf_counter() - t0, msg)
        if log is not None:
            log(f"{'PASS' if res.passed else 'FAIL'} {res.id} ({res.seconds:.1f}s)")
        out.append(res)
    return out


def write_junit(results: list[CheckResult], path: Path) -> None:
    failures = sum(not r.passed for r in results)
    suite = ET.Element("testsuite", name="conekit.selftest", tests=str(len(results)),
                       failures=str(failures), errors="0",
                       time=f"{sum(r.seconds for r in results):.3f}")
    for r in results:
        module, _, name = r.id.partition(".")
        case = ET.SubElement(suite, "testcase", classname=f"conekit.{module}", name=name,
                             time=f"{r.seconds:.3f}")
        if not r.passed:
            fail = ET.SubElement(case, "failure", message=r.message.splitlines()[0] if r.message else "")
            fail.text = r.message
    path.parent.mkdir(parents=True, exist_ok=True)
    ET.ElementTree(suite).write(path, encoding="utf-8", xml_declaration=True)
