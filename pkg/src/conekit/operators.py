"""Integral operators ``Kf(x) = int_V k(x, y) f(y) dy`` with homogeneous kernels.

Built-in kernels:

* ``hardy``: indicator of the interval from 0 to ``x`` (order 0).
* ``laplace``: ``exp(-x*.y)`` (order 0).
* ``rl(r)``: ``delta(x - y)^(r-1) / Gamma(r)`` on the interval (order ``r - 1``).
* ``weyl(r)``: ``delta(y - x)^(r-1) / Gamma(r)`` on ``x + V`` (order ``r - 1``).
* ``dual_laplace``: ``exp(-x.y)`` with ``x`` in the dual cone.
* ``dual_hardy``: indicator of the interval from 0 to the star image of ``x``
  in the dual cone.

Estimates use uniform interval sampling when the integration domain is a
bounded interval and the polar samplers of :mod:`conekit.sampling` otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .charfn import _log_delta
from .cones import ConeModel, _margin, _sample_intervals, as_points, dual, require_inside
from .errors import IntegrabilityError
from .functions import TestFunction
from .mc import McConfig, McEstimate, Moments, map_chunks, reduce_moments, to_estimate
from .sampling import radial_gamma, radial_log_cauchy
from .star import _star


@dataclass(frozen=True)
class KernelSpec:
    """An evaluable kernel with its homogeneity order and side.

    ``side`` is ``"VxV"`` or ``"VstarxV"`` (first argument in the dual cone).
    ``support`` tells the integrator where ``k(x, .)`` lives: ``"interval"``
    (from 0 to ``interval_end(x)``), ``"upper"`` (``x + V``) or ``"global"``.
    For global kernels ``rate(x)`` is the vector ``a`` with
    ``k(x, y) = exp(-a.y)``.
    """

    name: str
    beta: float
    side: str
    eval_fn: Callable = field(repr=False, compare=False)
    support: str = "global"
    interval_end: Callable | None = field(default=None, repr=False, compare=False)
    rate: Callable | None = field(default=None, repr=False, compare=False)
    r: float = 1.0

    def eval(self, cone: ConeModel, X, Y) -> np.ndarray:
        """``k(x, y)`` for broadcastable batches ``X`` and ``Y``."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        shape = np.broadcast_shapes(X.shape, Y.shape)
        Xb = np.broadcast_to(X, shape).reshape(-1, cone.dim)
        Yb = np.broadcast_to(Y, shape).reshape(-1, cone.dim)
        return self.eval_fn(cone, Xb, Yb).reshape(shape[:-1])


def _pos(cone, Z):
    return _margin(cone, Z) > 0


def _pow_delta(cone, Z, p):
    ok = _pos(cone, Z)
    out = np.zeros(Z.shape[0])
    if np.any(ok):
        out[ok] = np.exp(p * _log_delta(cone, Z[ok])) if p else 1.0
    return out


def _hardy_eval(cone, X, Y):
    return (_pos(cone, Y) & _pos(cone, X - Y)).astype(float)


def _laplace_eval(cone, X, Y):
    with np.errstate(over="ignore"):
        return np.where(_pos(cone, Y), np.exp(-np.sum(_star(cone, X) * Y, axis=1)), 0.0)


def _dual_laplace_eval(cone, X, Y):
    with np.errstate(over="ignore"):
        return np.where(_pos(cone, Y), np.exp(-np.sum(X * Y, axis=1)), 0.0)


def _dual_hardy_eval(cone, X, Y):
    E = _star(dual(cone), X)
    return (_pos(cone, Y) & _pos(cone, E - Y)).astype(float)


def hardy_kernel() -> KernelSpec:
    return KernelSpec("hardy", 0.0, "VxV", _hardy_eval, "interval", interval_end=lambda c, X: X)


def laplace_kernel() -> KernelSpec:
    return KernelSpec("laplace", 0.0, "VxV", _laplace_eval, "global",
                      rate=lambda c, X: _star(c, X))


def rl_kernel(r: float) -> KernelSpec:
    r = _check_r(r)
    g = math.gamma(r)

    def ev(cone, X, Y):
        return _hardy_eval(cone, X, Y) * _pow_delta(cone, X - Y, r - 1.0) / g

    return KernelSpec(f"rl({r:g})", r - 1.0, "VxV", ev, "interval",
                      interval_end=lambda c, X: X, r=r)


def weyl_kernel(r: float) -> KernelSpec:
    r = _check_r(r)
    g = math.gamma(r)

    def ev(cone, X, Y):
        return _pow_delta(cone, Y - X, r - 1.0) / g

    return KernelSpec(f"weyl({r:g})", r - 1.0, "VxV", ev, "upper", r=r)


def dual_laplace_kernel() -> KernelSpec:
    return KernelSpec("dual_laplace", 0.0, "VstarxV", _dual_laplace_eval, "global",
                      rate=lambda c, X: X)


def dual_hardy_kernel() -> KernelSpec:
    return KernelSpec("dual_hardy", 0.0, "VstarxV", _dual_hardy_eval, "interval",
                      interval_end=lambda c, X: _star(dual(c), X))


KERNELS = {"hardy": hardy_kernel, "laplace": laplace_kernel, "dual_laplace": dual_laplace_kernel,
           "dual_hardy": dual_hardy_kernel}


def kernel_by_name(name: str, r: float = 1.0) -> KernelSpec:
    if name == "rl":
        return rl_kernel(r)
    if name == "weyl":
        return weyl_kernel(r)
    if name not in KERNELS:
        raise ValueError(f"unknown kernel {name!r}")
    return KERNELS[name]()


def _check_r(r) -> float:
    r = float(r)
    if not r >= 1.0:
        raise ValueError(f"fractional order r must be >= 1, got {r}")
    return r


# ---------------------------------------------------------------- integration engine

def _left_cone(cone: ConeModel, k: KernelSpec) -> ConeModel:
    return dual(cone) if k.side == "VstarxV" else cone


def check_weyl_decay(f: TestFunction, r: float) -> None:
    """Refuse ``f`` whose declared decay leaves the Weyl integral divergent."""
    if f.is_zero or f.support is not None or f.rate_vec is not None:
        return
    d = f.decay_exponent
    if d is None:
        raise IntegrabilityError(f"{f.name} needs a declared decay_exponent on an unbounded domain")
    if not d < -r:
        raise IntegrabilityError(
            f"decay exponent {d:g} of {f.name} is not below -r = {-r:g}; the integral diverges")


def kernel_weights(cone: ConeModel, k: KernelSpec, f: TestFunction, X: np.ndarray,
                   rng: np.random.Generator, m: int) -> np.ndarray:
    """Unbiased weights of shape ``(len(X), m)`` whose row means estimate ``Kf(X[i])``."""
    X = np.asarray(X, dtype=float).reshape(-1, cone.dim)
    M, n = X.shape
    if f.is_zero:
        return np.zeros((M, m))
    if k.support == "interval":
        E = k.interval_end(cone, X)
        if f.support is not None:
            # sample whichever of the two intervals is smaller
            b = f.support
            vol_b = float(np.exp(_log_delta(cone, b[None, :])[0]))
            use_b = np.exp(_log_delta(cone, E)) > vol_b
            E = np.where(use_b[:, None], b, E)
        Y = _sample_intervals(cone, E, rng, m)
        vol = np.exp(_log_delta(cone, E))
        return vol[:, None] * k.eval(cone, X[:, None, :], Y) * f(Y)
    if f.support is not None:
        b = f.support
        if k.support == "upper":
            span = b - X
            ok = _margin(cone, span) > 0
            w = np.zeros((M, m))
            if np.any(ok):
                S = span[ok]
                Y = X[ok][:, None, :] + _sample_intervals(cone, S, rng, m)
                vol = np.exp(_log_delta(cone, S))
                w[ok] = vol[:, None] * k.eval(cone, X[ok][:, None, :], Y) * f(Y)
            return w
        Y = _sample_intervals(cone, b[None, :], rng, M * m).reshape(M, m, n)
        vol = math.exp(float(_log_delta(cone, b[None, :])[0]))
        return vol * k.eval(cone, X[:, None, :], Y) * f(Y)
    lam = np.zeros(n) if f.rate_vec is None else f.rate_vec
    power = 0.0 if f.power is None else f.power
    if k.support == "global":
        rate = k.rate(cone, X) + lam
        shape = max(n * (1.0 + power), 0.5)
        Y, w = radial_gamma(cone, rng, (M, m), shape, rate[:, None, :])
        return w * k.eval(cone, X[:, None, :], Y) * f(Y)
    check_weyl_decay(f, k.r)
    if f.rate_vec is not None:
        U, w = radial_gamma(cone, rng, (M, m), n * (k.r + max(power, 0.0)), lam)
    else:
        loc = np.log(np.linalg.norm(X, axis=1) + 1.0)[:, None]
        U, w = radial_log_cauchy(cone, rng, (M, m), loc=loc)
    Y = X[:, None, :] + U
    return w * k.eval(cone, X[:, None, :], Y) * f(Y)


def apply_kernel(cone: ConeModel, k: KernelSpec, f: TestFunction, x, mc: McConfig,
                 key=None) -> McEstimate:
    """Monte Carlo estimate of ``Kf(x)``.

    Examples
    --------
    >>> from conekit.cones import orthant
    >>> from conekit.functions import constant
    >>> V = orthant(2)
    >>> round(apply_kernel(V, hardy_kernel(), constant(V), [2.0, 3.0], McConfig(1000)).value, 9)
    6.0
    """
    X, _ = require_inside(_left_cone(cone, k), x, "operator argument")
    if k.support == "upper":
        check_weyl_decay(f, k.r)
    if f.is_zero:
        return McEstimate(0.0, 0.0, mc.samples)
    key = ("apply", k.name, f.name) if key is None else key
    parts = map_chunks(lambda rng, m, i: Moments.of(kernel_weights(cone, k, f, X, rng, m)[0]),
                       mc, key)
    return to_estimate(reduce_moments(parts))


def hardy(cone: ConeModel, f: TestFunction, x, mc: McConfig) -> McEstimate:
    """``Hf(x)``: integral of ``f`` over the interval from 0 to ``x``."""
    return apply_kernel(cone, hardy_kernel(), f, x, mc)


def laplace(cone: ConeModel, f: TestFunction, x, mc: McConfig) -> McEstimate:
    """``Lf(x)``: integral of ``exp(-x*.y) f(y)`` over the cone."""
    return apply_kernel(cone, laplace_kernel(), f, x, mc)


def riemann_liouville(cone: ConeModel, r: float, f: TestFunction, x, mc: McConfig) -> McEstimate:
    """Fractional integral of order ``r >= 1`` over the interval from 0 to ``x``."""
    return apply_kernel(cone, rl_kernel(r), f, x, mc)


def weyl(cone: ConeModel, r: float, f: TestFunction, x, mc: McConfig) -> McEstimate:
    """Fractional integral of order ``r >= 1`` over ``x + V``.

    ``x`` may lie on the boundary of the cone (for instance ``x = 0``).
    """
    k = weyl_kernel(r)
    X, _ = as_points(cone, x)
    closure_ok = _margin(cone, X) > -1e-12 * (1.0 + np.linalg.norm(X, axis=1))
    if not np.all(closure_ok):
        raise IntegrabilityError("weyl needs x in the closed cone")
    check_weyl_decay(f, k.r)
    if f.is_zero:
        return McEstimate(0.0, 0.0, mc.samples)
    parts = map_chunks(lambda rng, m, i: Moments.of(kernel_weights(cone, k, f, X, rng, m)[0]),
                       mc, ("apply", k.name, f.name))
    return to_estimate(reduce_moments(parts))


def s_transform(cone: ConeModel, f: TestFunction) -> TestFunction:
    """``Sf(x) = f(x*)`` on the dual cone, using the star map of the dual."""
    vd = dual(cone)

    def fn(Y):
        ok = _margin(vd, Y) > 0
        out = np.zeros(Y.shape[0])
        if np.any(ok):
            out[ok] = f.eval_fn(_star(vd, Y[ok]))
        return out

    power = None if f.power is None else -f.power
    return TestFunction(f"S[{f.name}]", vd, fn, decay_exponent=None, power=power,
                        is_zero=f.is_zero)


def fubini_duality_check(cone: ConeModel, r: float, f: TestFunction, g: TestFunction,
                         mc: McConfig) -> tuple[McEstimate, McEstimate]:
    """Both sides of ``int_V (R_r g) f = int_V g (W_r f)``.

    ``g`` must be supported on an interval; ``f`` needs declared decay.  The
    two estimates share seeds and chunking.  The left side samples the outer
    variable over the whole cone (matched to the decay of ``f``) and the right
    side uniformly over the support of ``g``.
    """
    r = _check_r(r)
    if g.support is None:
        raise ValueError("fubini_duality_check needs g supported on an interval")
    check_weyl_decay(f, r)
    if f.is_zero or g.is_zero:
        zero = McEstimate(0.0, 0.0, mc.samples)
        return zero, zero
    n = cone.dim
    rk, wk = rl_kernel(r), weyl_kernel(r)
    b = g.support
    vol_b = math.exp(float(_log_delta(cone, b[None, :])[0]))
    inner = 1

    def lhs(rng, m, i):
        if f.rate_vec is not None:
            X, w = radial_gamma(cone, rng, m, max(n * (1.0 + (f.power or 0.0) + r), 0.5), f.rate_vec)
        else:
            X, w = radial_log_cauchy(cone, rng, m, loc=math.log(np.linalg.norm(b) + 1.0))
        ok = (w > 0) & (_margin(cone, X) > 0)
        vals = np.zeros(m)
        if np.any(ok):
            Kg = kernel_weights(cone, rk, g, X[ok], rng, inner).mean(axis=1)
            vals[ok] = w[ok] * Kg * f(X[ok])
        return Moments.of(vals)

    def rhs(rng, m, i):
        Y = _sample_intervals(cone, b[None, :], rng, m)[0]
        Wf = kernel_weights(cone, wk, f, Y, rng, inner).mean(axis=1)
        return Moments.of(vol_b * g(Y) * Wf)

    key = ("fubini", f.name, g.name, r)
    left = to_estimate(reduce_moments(map_chunks(lhs, mc, key)))
    right = to_estimate(reduce_moments(map_chunks(rhs, mc, key)))
    return left, right
