"""Nonnegative test functions on a cone, with the metadata samplers rely on.

Every function is 0 outside its cone.  ``decay_exponent`` declares a bound
``f(y) <= C delta(y)^d`` for large ``y`` (``-inf`` for exponential decay or
bounded support).  ``support`` is the far corner ``b`` of an interval from 0
when ``f`` vanishes outside it.  ``power`` and ``rate_vec`` describe the
factor ``delta^power exp(-rate_vec . y)`` when ``f`` has that shape and let
samplers match the integrand.

Expressions use a small grammar: numbers, ``x`` (the point), ``+ - * / ^``,
parentheses, unary minus and the calls ``delta(x)``, ``dot([a1, ..., an], x)``
and ``exp(.)``.  On a one-dimensional cone ``x`` may also appear on its own.
Example: ``"delta(x)^0.5 * exp(-dot([1, 1], x))"``.
"""
from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .charfn import _log_delta, delta_power as _delta_power
from .cones import ConeModel, _margin, center, dual, require_inside
from .errors import ConfigError


@dataclass(frozen=True)
class TestFunction:
    """A nonnegative function on ``cone`` with declared decay and support."""

    __test__ = False

    name: str
    cone: ConeModel
    eval_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    decay_exponent: float | None = None
    support: np.ndarray | None = field(default=None, compare=False)
    power: float | None = None
    rate_vec: np.ndarray | None = field(default=None, compare=False)
    is_zero: bool = False

    def __call__(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        flat = Y.reshape(-1, self.cone.dim)
        out = np.asarray(self.eval_fn(flat), dtype=float).reshape(Y.shape[:-1])
        return out

    def eval(self, Y) -> np.ndarray:
        return self(Y)


def _inside(cone, Y):
    return _margin(cone, Y) > 0


def delta_power(cone: ConeModel, power: float) -> TestFunction:
    """``delta^power`` on the whole cone."""
    p = float(power)
    return TestFunction(f"delta^{p:g}", cone, lambda Y: _delta_power(cone, Y, p),
                        decay_exponent=p, power=p)


def indicator_interval(cone: ConeModel, b, power: float = 0.0) -> TestFunction:
    """``delta^power`` times the indicator of the interval from 0 to ``b``."""
    bv = require_inside(cone, b, "support corner")[0][0]
    p = float(power)

    def fn(Y):
        ok = _inside(cone, Y) & _inside(cone, bv - Y)
        out = np.zeros(Y.shape[0])
        if np.any(ok):
            out[ok] = np.exp(p * _log_delta(cone, Y[ok])) if p else 1.0
        return out

    label = "chi<0," + ",".join(f"{v:g}" for v in bv) + ">"
    name = label if p == 0 else f"delta^{p:g}*{label}"
    return TestFunction(name, cone, fn, decay_exponent=-math.inf, support=bv, power=p)


def exp_damped_power(cone: ConeModel, power: float, rate: float = 1.0) -> TestFunction:
    """``delta^power exp(-rate e*.y)`` with ``e*`` the centre of the dual cone."""
    p, lam = float(power), float(rate)
    if lam <= 0:
        raise ConfigError("exp_damped_power needs a positive rate")
    rv = lam * center(dual(cone))

    def fn(Y):
        ok = _inside(cone, Y)
        out = np.zeros(Y.shape[0])
        if np.any(ok):
            Z = Y[ok]
            out[ok] = np.exp(p * _log_delta(cone, Z) - Z @ rv)
        return out

    return TestFunction(f"delta^{p:g}*exp(-{lam:g}e*.y)", cone, fn,
                        decay_exponent=-math.inf, power=p, rate_vec=rv)


def zero(cone: ConeModel) -> TestFunction:
    return TestFunction("zero", cone, lambda Y: np.zeros(Y.shape[0]),
                        decay_exponent=-math.inf, is_zero=True)


def constant(cone: ConeModel, value: float = 1.0) -> TestFunction:
    v = float(value)
    return TestFunction(f"const({v:g})", cone, lambda Y: v * _inside(cone, Y),
                        decay_exponent=0.0, power=0.0)


def scaled(f: TestFunction, lam: float) -> TestFunction:
    lam = float(lam)
    if lam < 0:
        raise ConfigError("test functions must stay nonnegative")
    return replace(f, name=f"{lam:g}*{f.name}", eval_fn=lambda Y: lam * f.eval_fn(Y),
                   is_zero=f.is_zero or lam == 0)


def times_delta(f: TestFunction, a: float) -> TestFunction:
    """``f delta^a``; power and decay metadata shift by ``a``."""
    a = float(a)
    if a == 0:
        return f
    cone = f.cone

    def fn(Y):
        out = f.eval_fn(Y)
        pos = out > 0
        if np.any(pos):
            out = out.copy()
            out[pos] *= np.exp(a * _log_delta(cone, Y[pos]))
        return out

    power = None if f.power is None else f.power + a
    decay = f.decay_exponent
    if decay is not None and math.isfinite(decay):
        decay = decay + a
    return replace(f, name=f"{f.name}*delta^{a:g}", eval_fn=fn, power=power, decay_exponent=decay)


def composed(f: TestFunction, A) -> TestFunction:
    """``f o A^-1`` for an automorphism ``A`` of the cone, so supports move with ``A``."""
    A = np.asarray(A, dtype=float)
    A_inv = np.linalg.inv(A)
    cone = f.cone
    support = None if f.support is None else A @ f.support
    rate = None if f.rate_vec is None else A_inv.T @ f.rate_vec
    return replace(f, name=f"{f.name}oA^-1", eval_fn=lambda Y: f.eval_fn(Y @ A_inv.T),
                   support=support, rate_vec=rate)


# ---------------------------------------------------------------- expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _compile(node, cone: ConeModel):
    if isinstance(node, ast.Expression):
        return _compile(node.body, cone)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        v = float(node.value)
        return lambda Y: np.full(Y.shape[0], v)
    if _is_x(node) and cone.dim == 1:
        return lambda Y: Y[:, 0]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op, lhs, rhs = _BINOPS[type(node.op)], _compile(node.left, cone), _compile(node.right, cone)
        return lambda Y: op(lhs(Y), rhs(Y))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand, cone)
        sign = -1.0 if isinstance(node.op, ast.USub) else 1.0
        return lambda Y: sign * inner(Y)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name, args = node.func.id, node.args
        if name == "delta" and len(args) == 1 and _is_x(args[0]):
            return lambda Y: np.exp(_log_delta(cone, Y))
        if name == "exp" and len(args) == 1:
            inner = _compile(args[0], cone)
            return lambda Y: np.exp(inner(Y))
        if name == "dot" and len(args) == 2 and _is_x(args[1]) and isinstance(args[0], ast.List):
            a = np.array([_number(e) for e in args[0].elts])
            if a.size != cone.dim:
                raise ConfigError(f"dot() vector has {a.size} entries, cone has dim {cone.dim}")
            return lambda Y: Y @ a
    raise ConfigError(f"unsupported expression element: {ast.dump(node)[:60]}")


def _is_x(node) -> bool:
    return isinstance(node, ast.Name) and node.id == "x"


def _number(node) -> float:
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_number(node.operand)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    raise ConfigError("dot() vector entries must be numbers")


def expression(cone: ConeModel, text: str, decay_exponent: float | None = None,
               support=None) -> TestFunction:
    """Test function from an arithmetic expression in ``x`` (see module docs)."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    body = _compile(tree, cone)
    bv = None if support is None else require_inside(cone, support, "support corner")[0][0]

    def fn(Y):
        ok = _inside(cone, Y)
        if bv is not None:
            ok &= _inside(cone, bv - Y)
        out = np.zeros(Y.shape[0])
        if np.any(ok):
            with np.errstate(all="ignore"):
                vals = body(Y[ok])
            if np.any(vals < 0):
                raise ConfigError(f"expression {text!r} is negative on the cone")
            out[ok] = vals
        return out

    decay = -math.inf if bv is not None else decay_exponent
    return TestFunction(text, cone, fn, decay_exponent=decay, support=bv)


def from_spec(cone: ConeModel, spec: dict) -> TestFunction:
    """Build a test function from a config object such as ``{"kind": "delta_power", "delta": 0.5}``."""
    kind = spec.get("kind")
    try:
        if kind == "delta_power":
            return delta_power(cone, spec["delta"])
        if kind == "indicator_interval":
            return indicator_interval(cone, spec["b"], spec.get("delta", 0.0))
        if kind == "exp_damped_power":
            return exp_damped_power(cone, spec.get("delta", 0.0), spec.get("rate", 1.0))
        if kind == "expression":
            return expression(cone, spec["text"], spec.get("decay_exponent"), spec.get("support"))
        if kind == "zero":
            return zero(cone)
        if kind == "constant":
            return constant(cone, spec.get("value", 1.0))
    except KeyError as exc:
        raise ConfigError(f"test function {kind!r} is missing field {exc}") from None
    raise ConfigError(f"unknown test function kind {kind!r}")
