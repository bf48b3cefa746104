"""Exponent conditions and numerical checks of weighted norm inequalities.

An :class:`InequalityCase` names an inequality (``"T3.3"``, ``"T3.13a"``,
``"Hardy1D"``, ...), a cone and the exponents.  :func:`check_conditions`
evaluates the sufficient exponent condition with the critical exponents of
the cone and its dual.  :func:`verify` estimates both sides of the inequality
for a family of test functions at ``N`` and ``4N`` samples and calls the case
*consistent* when every ratio is finite and moves by at most 10%.
:func:`probe_violation` looks for evidence of failure outside the condition
region by watching how the left side accumulates over decades of radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .charfn import _log_delta, sigma0
from .cones import ConeModel, _margin, _sample_intervals, center, dual, orthant
from .errors import ConfigError
from .functions import TestFunction, exp_damped_power, indicator_interval, times_delta
from .mc import (McConfig, McEstimate, Moments, chunk_lengths, map_chunks, reduce_moments,
                 to_estimate)
from .operators import KernelSpec, kernel_by_name, kernel_weights
from .sampling import directions, radial_gamma, radial_log_cauchy

STABILITY_TOLERANCE = 0.10
GROWTH_FACTOR = 1.5
INNER_PER_OUTER = 10
SHELL_DECADES = tuple(range(-4, 4))
SHELL_GROWTH_RATIO = 0.8
SUP_POINTS = 100_000

INTEGRAL_FORMS = ("T3.3", "T3.13a", "T3.14a", "T3.15a", "Hardy1D", "Bradley1D", "C3.1")
THEOREMS = ("T3.3", "T3.4", "T3.5", "T3.6", "T3.9", "T3.10", "T3.11", "T3.12",
            "T3.13a", "T3.13b", "T3.13c", "T3.14a", "T3.14b", "T3.14c",
            "T3.15a", "T3.15b", "T3.15c", "Hardy1D", "Bradley1D", "C3.1")
DIRECT = ("T3.3", "T3.4", "T3.5", "T3.6")
DUAL = ("T3.9", "T3.10", "T3.11", "T3.12")


def _p_prime_inv(p: float) -> float:
    """``1/p'`` with ``1/p + 1/p' = 1``; 0 at ``p = 1`` and 1 at ``p = inf``."""
    return 1.0 - 1.0 / p


@dataclass(frozen=True)
class InequalityCase:
    """An inequality and its exponents.

    ``kernel`` applies to the generic inequalities (defaults: ``hardy`` for the
    direct forms, ``dual_laplace`` for the dual forms); the named operator
    inequalities fix their own kernel.
    """

    theorem: str
    cone: ConeModel
    p: float = 2.0
    q: float = 2.0
    gamma: float = 0.0
    delta: float | None = None
    alpha: float | None = None
    r: float = 1.0
    kernel: str | None = None

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise ConfigError(f"unknown theorem {self.theorem!r}")
        for name in ("p", "q"):
            v = float(getattr(self, name))
            if not v >= 1:
                raise ConfigError(f"{name} must lie in [1, inf], got {v}")
        if not float(self.r) >= 1:
            raise ConfigError(f"r must be >= 1, got {self.r}")
        if self.theorem in INTEGRAL_FORMS + ("T3.9",) and not self.p <= self.q:
            raise ConfigError(f"{self.theorem} needs p <= q")
        if self.theorem in INTEGRAL_FORMS + ("T3.9",) and math.isinf(self.q):
            raise ConfigError(f"{self.theorem} needs q < inf; use the sup-norm variants")
        if self.theorem in ("Hardy1D", "Bradley1D") and self.cone.dim != 1:
            raise ConfigError(f"{self.theorem} lives on the half-line")
        if self.theorem[-1] in "bc" and self.alpha is None:
            raise ConfigError(f"{self.theorem} needs alpha")

    @property
    def label(self) -> str:
        parts = [self.theorem, self.cone.label, f"p={self.p:g}", f"q={self.q:g}"]
        if self.theorem[-1] in "bc":
            parts.append(f"alpha={self.alpha:g}")
        else:
            parts.append(f"gamma={self.gamma:g}")
        if self.theorem.startswith(("T3.13", "T3.14")):
            parts.append(f"r={self.r:g}")
        return " ".join(parts)

    def kernel_spec(self) -> KernelSpec:
        t = self.theorem
        if t.startswith("T3.13"):
            return kernel_by_name("rl", self.r)
        if t.startswith("T3.14"):
            return kernel_by_name("weyl", self.r)
        if t.startswith("T3.15"):
            return kernel_by_name("laplace")
        if t in ("Hardy1D", "Bradley1D", "C3.1"):
            return kernel_by_name("hardy")
        name = self.kernel or ("dual_laplace" if t in DUAL else "hardy")
        k = kernel_by_name(name, self.r)
        if (t in DUAL) != (k.side == "VstarxV"):
            raise ConfigError(f"kernel {k.name} does not match the side of {t}")
        if k.support == "upper":
            raise ConfigError(f"kernel {k.name} is only supported through T3.14")
        return k

    def to_dict(self) -> dict:
        from .cones import to_json
        return {"theorem": self.theorem, "cone": to_json(self.cone), "p": self.p, "q": self.q,
                "gamma": self.gamma, "delta": self.delta, "alpha": self.alpha, "r": self.r,
                "kernel": self.kernel}


# ---------------------------------------------------------------- conditions

@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a condition check.

    ``margin`` is the signed distance of the exponent (named by ``quantity``)
    to the boundary of the condition region, positive inside.
    """

    satisfied: bool
    margin: float
    quantity: str
    relation: str
    bound: float
    sigma: float
    sigma_dual: float
    witness_delta: float | None = None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"satisfied": self.satisfied, "margin": self.margin, "quantity": self.quantity,
                "relation": self.relation, "bound": self.bound, "sigma": self.sigma,
                "sigma_dual": self.sigma_dual, "witness_delta": self.witness_delta,
                "notes": list(self.notes)}


def _upper(value, bound, **kw) -> ConditionReport:
    margin = bound - value
    return ConditionReport(margin > 0, margin, relation="<", bound=bound, **kw)


def _lower(value, bound, **kw) -> ConditionReport:
    margin = value - bound
    return ConditionReport(margin > 0, margin, relation=">", bound=bound, **kw)


def _kernel_extra(k: KernelSpec) -> float:
    """Order carried by the kernel's own ``delta(x - y)`` factor."""
    return k.r - 1.0 if k.name.startswith("rl") else 0.0


def check_conditions(case: InequalityCase) -> ConditionReport:
    """Evaluate the sufficient exponent condition of ``case``.

    Examples
    --------
    >>> from conekit.cones import lorentz
    >>> rep = check_conditions(InequalityCase("T3.15a", lorentz(3), gamma=0.0))
    >>> rep.satisfied, round(rep.margin, 6)
    (True, 0.333333)
    """
    cone = case.cone
    s = sigma0(cone).sigma
    sd = sigma0(dual(cone)).sigma
    p, q, g, t = float(case.p), float(case.q), float(case.gamma), case.theorem
    ip = _p_prime_inv(p)
    base = {"sigma": s, "sigma_dual": sd}
    if t in ("Hardy1D", "Bradley1D"):
        return _upper(g, q - 1.0, quantity="gamma", **base)
    if t == "C3.1":
        return _upper(g, -s * p - 1.0, quantity="gamma", **base)
    if t == "T3.13a":
        return _upper(g, -s * q * ip - sd + q * (1.0 / p - case.r + 1.0) - 2.0, quantity="gamma", **base)
    if t == "T3.13b":
        return _upper(case.alpha, 2.0 - (1.0 + s) * ip - case.r, quantity="alpha", **base)
    if t == "T3.13c":
        return _upper(case.alpha, 1.0 - case.r - s, quantity="alpha", **base)
    if t == "T3.14a":
        rep = _lower(g, s + sd * q * ip + 2.0 * q - q / p, quantity="gamma", **base)
        return replace(rep, notes=("the printed condition does not involve r",))
    if t == "T3.14b":
        return _lower(case.alpha, sd * ip + 2.0 - 1.0 / p, quantity="alpha", **base)
    if t == "T3.14c":
        return _lower(case.alpha, 2.0 + sd, quantity="alpha", **base)
    if t == "T3.15a":
        return _upper(g, -s * q * ip - sd + q / p - 2.0, quantity="gamma", **base)
    if t == "T3.15b":
        return _upper(case.alpha, 1.0 / p - s * ip, quantity="alpha", **base)
    if t == "T3.15c":
        return _upper(case.alpha, -s, quantity="alpha", **base)
    k = case.kernel_spec()
    beta, extra = k.beta, _kernel_extra(k)
    if t in ("T3.3", "T3.9"):
        return _check_hardy_type(case, s, sd, beta, extra)
    if t in ("T3.4", "T3.10"):
        if p == 1:
            margin = 1.0 - extra
            rep = ConditionReport(margin >= 0, margin, "delta", "exists", 1.0, s, sd, s + 1.0)
        else:
            d_up = (1.0 - extra) / (p - 1.0) - beta
            margin = d_up - s
            rep = ConditionReport(margin > 0, margin, "delta", "exists", d_up, s, sd,
                                  0.5 * (s + d_up) if margin > 0 else None)
        if case.delta is not None:
            d = float(case.delta)
            lim = math.inf if p == 1 else (1.0 - extra) / (p - 1.0) - beta
            m = min(d - s, lim - d)
            rep = replace(rep, satisfied=m > 0 or (m == 0 and d > s), margin=m, witness_delta=d)
        return rep
    if t in ("T3.5", "T3.11"):
        if p == 1:
            return _upper(beta, 1.0, quantity="beta", **base)
        return _lower((1.0 - beta) / ip - 1.0, s, quantity="(1-beta)p'-1", **base)
    d = s + 0.5 if case.delta is None else float(case.delta)
    return replace(_lower(d, s, quantity="delta", **base), witness_delta=d)


def _check_hardy_type(case, s, sd, beta, extra) -> ConditionReport:
    """Exists ``delta > sigma`` making both kernel integrals finite."""
    p, q, g = float(case.p), float(case.q), float(case.gamma)
    ip = _p_prime_inv(p)
    bound = q - 2.0 - sd - extra * q / p - (s + beta + 1.0) * q * ip
    margin = bound - g
    if ip == 0:
        d_up = math.inf
    else:
        d_up = (q - 2.0 - sd - extra * q / p - g) / (q * ip) - beta - 1.0
    witness = None
    if margin > 0:
        hi = d_up if math.isfinite(d_up) else s + 2.0
        grid = np.linspace(s, hi, 34)[1:-1]
        witness = float(grid[len(grid) // 2 - 1: len(grid) // 2 + 1].mean())
    return ConditionReport(margin > 0, margin, "gamma", "<", bound, s, sd, witness)


def bradley_constant(u_exp: float, v_exp: float, p: float, q: float) -> float:
    """``sup_r (int_r^inf u^q)^(1/q) (int_0^r v^(-p'))^(1/p')`` for power weights.

    ``u(x) = x^u_exp`` and ``v(x) = x^v_exp``.  Returns ``inf`` when either
    integral diverges or the two powers of ``r`` do not cancel.

    Examples
    --------
    >>> bradley_constant(-1.0, 0.0, 2.0, 2.0)
    1.0
    """
    p, q = float(p), float(q)
    if not 1 <= p <= q:
        raise ValueError("bradley_constant needs 1 <= p <= q")
    if math.isinf(q):
        if u_exp > 0:
            return math.inf
        a_exp, a_val = u_exp, 1.0
    else:
        t = q * u_exp + 1.0
        if t >= 0:
            return math.inf
        a_exp, a_val = t / q, (-1.0 / t) ** (1.0 / q)
    if p == 1:
        if v_exp > 0:
            return math.inf
        b_exp, b_val = -v_exp, 1.0
    else:
        pp = p / (p - 1.0)
        t = 1.0 - pp * v_exp
        if t <= 0:
            return math.inf
        b_exp, b_val = t / pp, (1.0 / t) ** (1.0 / pp)
    if abs(a_exp + b_exp) > 1e-12:
        return math.inf
    return a_val * b_val


def hardy1d_weights(gamma: float, p: float, q: float) -> tuple[float, float]:
    """Power weights ``(u_exp, v_exp)`` that put the 1-D Hardy inequality in Bradley form."""
    u = (gamma - q) / q
    v = ((gamma + 1.0) * p / q - 1.0) / p
    return u, v


# ---------------------------------------------------------------- norm shapes

@dataclass(frozen=True)
class NormShape:
    """Which integrals or suprema form the two sides of an inequality."""

    lhs_sup: bool
    lhs_dual: bool
    lhs_exp: float
    lhs_q: float
    pre_power: float
    rhs_sup: bool
    rhs_exp: float
    rhs_p: float


def norm_shape(case: InequalityCase, beta: float) -> NormShape:
    t, p, q, g = case.theorem, float(case.p), float(case.q), float(case.gamma)
    w = beta * p + (g + 1.0) * p / q - 1.0
    if t in INTEGRAL_FORMS:
        return NormShape(False, False, g - q, q, 0.0, False, w, p)
    if t == "T3.9":
        return NormShape(False, True, -g + q - 2.0, q, 0.0, False, w, p)
    if t in ("T3.4", "T3.5"):
        return NormShape(True, False, -1.0, 1.0, 0.0, False, beta * p - 1.0, p)
    if t in ("T3.10", "T3.11"):
        return NormShape(True, True, 1.0, 1.0, 0.0, False, beta * p - 1.0, p)
    d = case.delta if case.delta is not None else check_conditions(case).witness_delta
    if t == "T3.6":
        return NormShape(True, False, -1.0 - d - beta, 1.0, 0.0, True, -d, math.inf)
    if t == "T3.12":
        return NormShape(True, True, 1.0 + d + beta, 1.0, 0.0, True, -d, math.inf)
    a = float(case.alpha)
    if t[-1] == "b":
        return NormShape(True, False, -1.0 + a, 1.0, -a, False, beta * p - 1.0, p)
    return NormShape(True, False, -1.0 + a, 1.0, -a, True, beta, math.inf)


def _scale(f: TestFunction) -> float:
    if f.support is not None:
        return float(np.linalg.norm(f.support))
    if f.rate_vec is not None:
        return f.cone.dim / float(np.linalg.norm(f.rate_vec))
    return 1.0


def _pow_delta(cone: ConeModel, X: np.ndarray, e: float) -> np.ndarray:
    out = np.zeros(X.shape[:-1])
    flat = X.reshape(-1, cone.dim)
    ok = (_margin(cone, flat) > 0).reshape(out.shape)
    if np.any(ok):
        out[ok] = np.exp(e * _log_delta(cone, X[ok]))
    return out


# ---------------------------------------------------------------- weighted norms

def _norm_from(est: McEstimate, p: float) -> McEstimate:
    if not math.isfinite(est.value) or est.value <= 0:
        return est
    v = est.value ** (1.0 / p)
    se = est.stderr * v / (p * est.value)
    return replace(est, value=v, stderr=se)


def _split(parts, mc: McConfig):
    k = len(chunk_lengths(mc.samples, mc.chunk))
    small = to_estimate(reduce_moments(parts[:k]), ess_floor=0.0)
    large = to_estimate(reduce_moments(parts), ess_floor=0.0)
    return small, large


def _flag(small: McEstimate, large: McEstimate) -> McEstimate:
    grew = (not math.isfinite(large.value)
            or (small.value > 0 and large.value > GROWTH_FACTOR * small.value))
    return replace(large, diverged=True) if grew and not large.diverged else large


def _rhs_integrand(cone: ConeModel, f: TestFunction, e: float, p: float):
    """Sampler of ``f^p delta^e`` over the cone: returns ``weights(rng, m)``."""
    n = cone.dim
    if f.support is not None:
        b = f.support
        vol = math.exp(float(_log_delta(cone, b[None, :])[0]))

        def weights(rng, m):
            Y = _sample_intervals(cone, b[None, :], rng, m)[0]
            return vol * f(Y) ** p * _pow_delta(cone, Y, e)
        return weights
    if f.rate_vec is not None:
        shape = max(n * (1.0 + p * (f.power or 0.0) + e), 0.5)

        def weights(rng, m):
            Y, w = radial_gamma(cone, rng, m, shape, p * f.rate_vec)
            return w * f(Y) ** p * _pow_delta(cone, Y, e)
        return weights
    loc = math.log(_scale(f))

    def weights(rng, m):
        Y, w = radial_log_cauchy(cone, rng, m, loc=loc)
        return w * f(Y) ** p * _pow_delta(cone, Y, e)
    return weights


def _norm_precheck(cone: ConeModel, f: TestFunction, e: float, p: float) -> str | None:
    """Reason the integral of ``f^p delta^e`` is known to diverge, if any."""
    if f.power is None or f.is_zero:
        return None
    s = sigma0(cone).sigma
    if p * f.power + e <= s:
        return (f"local exponent {p * f.power + e:g} of {f.name} is not above "
                f"sigma = {s:g}; the integral diverges")
    return None


def _sup_points(cone: ConeModel, f: TestFunction, rng, m: int) -> np.ndarray:
    """Stratified points: uniform on an interval support, else log-radius strata."""
    if f.support is not None:
        return _sample_intervals(cone, f.support[None, :], rng, m)[0]
    T, w = directions(cone, rng, m)
    strata = (np.arange(m) + rng.random(m)) / m
    z = math.log(_scale(f)) + 8.0 * (strata - 0.5) * math.log(10.0)
    X = np.exp(z)[:, None] * T
    return X[w > 0]


def weighted_norm_pair(cone: ConeModel, f: TestFunction, weight_exp: float, p: float,
                       mc: McConfig, key=0) -> tuple[McEstimate, McEstimate]:
    """Weighted norm at ``N`` and ``4N`` samples; the second carries the growth flag."""
    p = float(p)
    if f.is_zero:
        z = McEstimate(0.0, 0.0, mc.samples)
        return z, replace(z, samples_used=4 * mc.samples)
    if math.isinf(p):
        def part(rng, m, i):
            X = _sup_points(cone, f, rng, m)
            vals = f(X) * _pow_delta(cone, X, weight_exp)
            return float(vals.max()) if vals.size else 0.0
        parts = map_chunks(part, mc, ("norm_sup", key), samples=4 * SUP_POINTS)
        k = len(chunk_lengths(SUP_POINTS, mc.chunk))
        small = McEstimate(max(parts[:k]), 0.0, SUP_POINTS, warning="sampled maximum (lower bound)")
        large = McEstimate(max(parts), 0.0, 4 * SUP_POINTS, warning="sampled maximum (lower bound)")
        return small, _flag(small, large)
    reason = _norm_precheck(cone, f, weight_exp, p)
    if reason:
        d = McEstimate(math.inf, math.inf, 0, diverged=True, warning=reason)
        return d, d
    weights = _rhs_integrand(cone, f, weight_exp, p)
    parts = map_chunks(lambda rng, m, i: Moments.of(weights(rng, m)), mc, ("norm", key),
                       samples=4 * mc.samples)
    small, large = _split(parts, mc)
    large = _flag(small, large)
    return _norm_from(small, p), _norm_from(large, p)


def weighted_norm(cone: ConeModel, f: TestFunction, weight_exp: float, p: float,
                  mc: McConfig, key=0) -> McEstimate:
    """``(int_V f^p delta^weight_exp)^(1/p)``; ``p = inf`` takes a sampled maximum.

    The estimate uses ``4N`` samples and is flagged ``diverged`` when it grew
    by more than 1.5x from the ``N``-sample prefix, or when the local exponent
    ``p * power + weight_exp`` is already known to be non-integrable.

    Examples
    --------
    >>> from conekit.cones import orthant
    >>> from conekit.functions import indicator_interval
    >>> V = orthant(1)
    >>> weighted_norm(V, indicator_interval(V, [1.0]), 0.0, 2.0, McConfig(1000)).value
    1.0
    """
    return weighted_norm_pair(cone, f, weight_exp, p, mc, key)[1]


# ---------------------------------------------------------------- left-hand sides

def _inner(cone, k, f, X, rng, q_groups):
    """Unbiased estimate of ``(Kf)^q`` for integer ``q``; plug-in power otherwise."""
    M = X.shape[0]
    if M == 0:
        return np.zeros(0)
    if float(q_groups).is_integer():
        g = int(q_groups)
        W = kernel_weights(cone, k, f, X, rng, g * INNER_PER_OUTER).reshape(M, g, INNER_PER_OUTER)
        return np.prod(W.mean(axis=2), axis=1)
    W = kernel_weights(cone, k, f, X, rng, 2 * INNER_PER_OUTER)
    return W.mean(axis=1) ** q_groups


def _outer_sampler(case: InequalityCase, f: TestFunction, dual_side: bool):
    cone = case.cone
    side = dual(cone) if dual_side else cone
    scale = _scale(f)
    loc = math.log(cone.dim / scale) if dual_side else math.log(scale)

    def draw(rng, m):
        return radial_log_cauchy(side, rng, m, loc=loc)
    return side, draw


def _lhs_integral_pair(case, k, f, shape: NormShape, mc, key):
    side, draw = _outer_sampler(case, f, shape.lhs_dual)
    cone = case.cone

    def part(rng, m, i):
        X, w = draw(rng, m)
        vals = np.zeros(m)
        ok = (w > 0) & (_margin(side, X) > 0)
        if np.any(ok):
            Xo = X[ok]
            vals[ok] = w[ok] * _pow_delta(side, Xo, shape.lhs_exp) * _inner(cone, k, f, Xo, rng, shape.lhs_q)
        return Moments.of(vals)

    parts = map_chunks(part, mc, ("lhs", key), samples=4 * mc.samples)
    small, large = _split(parts, mc)
    large = _flag(small, large)
    return _norm_from(small, shape.lhs_q), _norm_from(large, shape.lhs_q)


SUP_INNER = 64


def _lhs_sup_pair(case, k, f, shape: NormShape, mc, key):
    side = dual(case.cone) if shape.lhs_dual else case.cone
    cone = case.cone
    scale = _scale(f)
    loc = math.log(cone.dim / scale) if shape.lhs_dual else math.log(scale)
    outer = max(1, mc.samples // SUP_INNER)
    sub = McConfig(samples=outer, seed=mc.seed, chunk=mc.chunk, threads=mc.threads)

    def part(rng, m, i):
        T, w = directions(side, rng, m)
        strata = (np.arange(m) + rng.random(m)) / m
        X = np.exp(loc + 6.0 * (strata - 0.5) * math.log(10.0))[:, None] * T
        X = X[w > 0]
        if X.shape[0] == 0:
            return 0.0
        Kf = kernel_weights(cone, k, f, X, rng, SUP_INNER).mean(axis=1)
        return float(np.max(_pow_delta(side, X, shape.lhs_exp) * Kf))

    parts = map_chunks(part, sub, ("lhs_sup", key), samples=4 * outer)
    kk = len(chunk_lengths(outer, sub.chunk))
    note = "sampled maximum (lower bound)"
    small = McEstimate(max(parts[:kk]), 0.0, outer * SUP_INNER, warning=note)
    large = McEstimate(max(parts), 0.0, 4 * outer * SUP_INNER, warning=note)
    return small, _flag(small, large)


# ---------------------------------------------------------------- verification

@dataclass(frozen=True)
class FunctionResult:
    function_id: str
    lhs: McEstimate
    rhs: McEstimate
    ratio: float
    ratio_small: float
    verdict: str
    note: str | None = None


@dataclass(frozen=True)
class VerificationReport:
    case: InequalityCase
    conditions: ConditionReport
    per_function: tuple[FunctionResult, ...]
    max_ratio: float
    verdict: str
    shell_growth: bool | None = None
    notes: tuple[str, ...] = field(default=())


def _ratio(lhs: McEstimate, rhs: McEstimate) -> float:
    if not (math.isfinite(lhs.value) and math.isfinite(rhs.value)):
        return math.inf
    if rhs.value <= 0:
        return math.inf if lhs.value > 0 else math.nan
    return lhs.value / rhs.value


def _judge(lhs_s, lhs_l, rhs_s, rhs_l) -> tuple[float, float, str, str | None]:
    r_small, r_large = _ratio(lhs_s, rhs_s), _ratio(lhs_l, rhs_l)
    rhs_ok = math.isfinite(rhs_l.value) and not rhs_l.diverged and rhs_l.value > 0
    if rhs_ok and lhs_l.diverged:
        return r_small, r_large, "violated", "left side grows with sample size, right side stable"
    if not (math.isfinite(r_small) and math.isfinite(r_large)) or r_small <= 0:
        why = rhs_l.warning or lhs_l.warning or "non-finite ratio"
        return r_small, r_large, "inconclusive", why
    if lhs_l.diverged or rhs_l.diverged:
        return r_small, r_large, "inconclusive", "divergence flag on an estimate"
    if abs(r_large / r_small - 1.0) > STABILITY_TOLERANCE:
        return r_small, r_large, "inconclusive", f"ratio moved {r_large / r_small - 1:+.1%} from N to 4N"
    return r_small, r_large, "consistent", None


def default_family(case: InequalityCase) -> list[TestFunction]:
    """Three test functions at different scales with a finite right side."""
    cone = case.cone
    k = case.kernel_spec()
    shape = norm_shape(case, k.beta)
    s = sigma0(cone).sigma
    if shape.rhs_sup:
        d0 = max(0.0, -shape.rhs_exp)
    else:
        d0 = max(0.0, (s - shape.rhs_exp) / shape.rhs_p + 0.5)
    # f delta^pre must stay locally integrable for the operator
    d0 = max(d0, s - shape.pre_power + 0.5) if shape.pre_power else d0
    if case.theorem.startswith("T3.15") or case.theorem in DUAL:
        return [exp_damped_power(cone, d0, lam) for lam in (0.5, 1.0, 2.0)]
    c = center(cone)
    return [indicator_interval(cone, t * c, d0) for t in (0.5, 1.0, 2.0)]


def _with_pre(f: TestFunction, shape: NormShape) -> TestFunction:
    return times_delta(f, shape.pre_power)


def verify(case: InequalityCase, family: list[TestFunction] | None, mc: McConfig) -> VerificationReport:
    """Estimate both sides for every family member at ``N`` and ``4N`` samples.

    Integral left sides nest an inner estimate of ``Kf`` (10 samples per outer
    point, and ``q`` independent groups so that ``(Kf)^q`` stays unbiased for
    integer ``q``) inside a radial outer sampler.  Sup-norm sides use sampled
    maxima over stratified points.  The case is ``consistent`` when every
    ratio is finite and moves by at most 10% from ``N`` to ``4N``;
    ``violated`` needs a left side that keeps growing while the right side is
    stable; anything else is ``inconclusive``.
    """
    cond = check_conditions(case)
    notes = list(cond.notes)
    if not cond.satisfied:
        notes.append("conditions not satisfied; the ratios carry no guarantee")
    family = default_family(case) if family is None else list(family)
    k = case.kernel_spec()
    shape = norm_shape(case, k.beta)
    results = []
    for idx, f in enumerate(family):
        key = (case.label, idx)
        try:
            g = _with_pre(f, shape)
            if shape.lhs_sup:
                lhs_s, lhs_l = _lhs_sup_pair(case, k, g, shape, mc, key)
            else:
                lhs_s, lhs_l = _lhs_integral_pair(case, k, g, shape, mc, key)
            rhs_s, rhs_l = weighted_norm_pair(case.cone, f, shape.rhs_exp, shape.rhs_p, mc, key)
            r_small, r_large, verdict, note = _judge(lhs_s, lhs_l, rhs_s, rhs_l)
            results.append(FunctionResult(f.name, lhs_l, rhs_l, r_large, r_small, verdict, note))
        except (ValueError, RuntimeError) as exc:
            nan = McEstimate(math.nan, math.nan, 0)
            results.append(FunctionResult(f.name, nan, nan, math.nan, math.nan, "inconclusive", str(exc)))
    verdicts = [r.verdict for r in results]
    if "violated" in verdicts:
        verdict = "violated"
    elif verdicts and all(v == "consistent" for v in verdicts):
        verdict = "consistent"
    else:
        verdict = "inconclusive"
    finite = [r.ratio for r in results if math.isfinite(r.ratio)]
    max_ratio = max(finite) if len(finite) == len(results) and finite else math.inf
    return VerificationReport(case, cond, tuple(results), max_ratio, verdict, notes=tuple(notes))


# ---------------------------------------------------------------- violation probes

def probe_function(case: InequalityCase) -> TestFunction:
    """Truncated power ``delta^e chi<0,b>`` just inside the integrable range of the right side."""
    k = case.kernel_spec()
    shape = norm_shape(case, k.beta)
    s = sigma0(case.cone).sigma
    if shape.rhs_sup:
        e = -shape.rhs_exp
    else:
        # locally integrable f with a finite right side, as singular as allowed
        e = max(-(shape.rhs_exp + 1.0) / shape.rhs_p, s, (s - shape.rhs_exp) / shape.rhs_p) + 0.25
    return indicator_interval(case.cone, center(case.cone), e)


def shell_profile(case: InequalityCase, f: TestFunction, mc: McConfig) -> list[McEstimate]:
    """Contributions to the integral left side from radial decades ``10^j |b|``."""
    k = case.kernel_spec()
    shape = norm_shape(case, k.beta)
    if shape.lhs_sup:
        raise ValueError("shell profiles need an integral left side")
    side = dual(case.cone) if shape.lhs_dual else case.cone
    cone = case.cone
    g = _with_pre(f, shape)
    base = math.log(_scale(f))
    if shape.lhs_dual:
        base = math.log(cone.dim) - base
    out = []
    for j in SHELL_DECADES:
        lo = base + j * math.log(10.0)

        def part(rng, m, i, lo=lo):
            T, wdir = directions(side, rng, m)
            z = lo + math.log(10.0) * rng.random(m)
            X = np.exp(z)[:, None] * T
            w = wdir * np.exp(side.dim * z) * math.log(10.0)
            vals = np.zeros(m)
            ok = w > 0
            if np.any(ok):
                Xo = X[ok]
                vals[ok] = w[ok] * _pow_delta(side, Xo, shape.lhs_exp) * _inner(cone, k, g, Xo, rng, shape.lhs_q)
            return Moments.of(vals)

        out.append(to_estimate(reduce_moments(map_chunks(part, mc, ("shell", case.label, j))),
                               ess_floor=0.0))
    return out


def shell_growth(profile: list[McEstimate]) -> bool:
    """True when the outermost or innermost decades stop shrinking."""
    v = [e.value for e in profile]
    if any(not math.isfinite(x) for x in v):
        return True

    def ratio(a, b):
        return math.inf if b <= 0 < a else (a / b if b > 0 else 0.0)

    outward = [ratio(v[i + 1], v[i]) for i in range(len(v) - 1)]
    inward = [ratio(v[i], v[i + 1]) for i in range(len(v) - 1)]
    grows_out = all(r >= SHELL_GROWTH_RATIO for r in outward[-2:])
    grows_in = all(r >= SHELL_GROWTH_RATIO for r in inward[:2])
    return grows_out or grows_in


@dataclass(frozen=True)
class ProbeReport:
    case: InequalityCase
    conditions: ConditionReport
    function_id: str | None
    rhs: McEstimate | None
    shells: tuple[McEstimate, ...]
    growth: bool
    verdict: str
    note: str


def probe_violation(case: InequalityCase, mc: McConfig) -> ProbeReport:
    """Look for evidence that the inequality fails outside its condition region.

    A truncated power sitting just inside the integrable range of the right
    side is pushed through the operator, and the left-side integral is split
    into radial decades.  If the outermost or innermost decades stop
    shrinking (successive ratios of at least 0.8) the left side diverges while
    the right side is finite, which is reported as ``violated``.  Cases whose
    conditions hold are refused.
    """
    cond = check_conditions(case)
    if cond.satisfied:
        return ProbeReport(case, cond, None, None, (), False, "refused",
                           "conditions are satisfied; no violation can be claimed")
    f = probe_function(case)
    k = case.kernel_spec()
    shape = norm_shape(case, k.beta)
    rhs = weighted_norm(case.cone, f, shape.rhs_exp, shape.rhs_p, mc, key=("probe", case.label))
    if not math.isfinite(rhs.value) or rhs.diverged:
        return ProbeReport(case, cond, f.name, rhs, (), False, "inconclusive",
                           "right side of the probe function is not finite")
    prof = shell_profile(case, f, mc)
    growth = shell_growth(prof)
    verdict = "violated" if growth else "inconclusive"
    note = ("left side keeps accumulating across radial decades" if growth
            else "left side contributions decay across radial decades")
    return ProbeReport(case, cond, f.name, rhs, tuple(prof), growth, verdict, note)


def sweep(case: InequalityCase, values, mc: McConfig, family=None) -> list[dict]:
    """Run ``case`` over a grid of ``gamma`` (or ``alpha`` for sup variants).

    Points inside the condition region are verified; points outside are
    probed.  Every row also records the decade-growth flag of the left side
    for the probe function, which is independent of the condition check.
    """
    rows = []
    name = "alpha" if case.theorem[-1] in "bc" else "gamma"
    for v in values:
        c = replace(case, **{name: float(v)})
        cond = check_conditions(c)
        row = {"case": c, "value": float(v), "conditions": cond}
        shape = norm_shape(c, c.kernel_spec().beta)
        if not shape.lhs_sup:
            row["growth"] = shell_growth(shell_profile(c, probe_function(c), mc))
        if cond.satisfied:
            row["report"] = verify(c, family, mc)
        else:
            row["report"] = probe_violation(c, mc)
        rows.append(row)
    return rows


def hardy1d_case(gamma: float = 0.0, p: float = 2.0, q: float = 2.0) -> InequalityCase:
    return InequalityCase("Hardy1D", orthant(1), p=p, q=q, gamma=gamma)


def dual_transfer(cone: ConeModel, f: TestFunction, q: float, power: float,
                  mc: McConfig) -> tuple[McEstimate, McEstimate]:
    """Both integrals of the transfer identity through the star map.

    Returns estimates of ``int_{V*} (Sf)^q delta_{V*}^power`` and
    ``int_V f^q delta^(-power-2)``; their ratio is a constant depending only
    on the cone.
    """
    from .operators import s_transform
    vd = dual(cone)
    sf = s_transform(cone, f)
    loc = math.log(cone.dim / _scale(f))

    def left(rng, m, i):
        Y, w = radial_log_cauchy(vd, rng, m, loc=loc)
        return Moments.of(w * sf(Y) ** q * _pow_delta(vd, Y, power))

    key = ("transfer", f.name, float(q), float(power))
    lhs = to_estimate(reduce_moments(map_chunks(left, mc, key)), ess_floor=0.0)
    weights = _rhs_integrand(cone, f, -power - 2.0, q)
    rhs = to_estimate(reduce_moments(map_chunks(lambda rng, m, i: Moments.of(weights(rng, m)), mc, key)),
                      ess_floor=0.0)
    return lhs, rhs
