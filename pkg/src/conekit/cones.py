"""Cone models: membership, duality, order, boundary distance and sampling.

Four kinds are supported.  ``orthant(n)`` is the positive orthant,
``lorentz(n)`` the forward light cone ``x_n > |x'|``, ``simplicial(A)`` the
image ``A * orthant`` of the orthant under a regular matrix, and
``product(V1, V2, ...)`` the Cartesian product.  All cones are open.

Points are numpy arrays whose last axis has length ``cone.dim``; every
predicate accepts a single point or a batch.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (ConstructionError, DimensionError, NonFiniteError, OutsideConeError,
                     RejectionBudgetExhausted)

EPS_DET = 1e-10
EPS_CLOSURE = 1e-12
MAX_REJECTIONS = 1_000_000
KINDS = ("orthant", "lorentz", "simplicial", "product")


@dataclass(frozen=True, eq=False)
class ConeModel:
    """Immutable description of a cone.  Build with the constructors below."""

    kind: str
    dim: int
    label: str
    matrix: tuple | None = None
    factors: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConstructionError(f"unknown cone kind {self.kind!r}")
        if int(self.dim) < 1:
            raise ConstructionError("cone dimension must be at least 1")
        if self.kind == "lorentz" and self.dim < 2:
            raise ConstructionError("lorentz cone needs dim >= 2")
        if self.kind == "product":
            if not self.factors:
                raise ConstructionError("product cone needs at least one factor")
            if sum(f.dim for f in self.factors) != self.dim:
                raise ConstructionError("product dim must equal the sum of factor dims")

    def _key(self):
        return (self.kind, self.dim, self.matrix, tuple(f._key() for f in self.factors))

    def __eq__(self, other):
        return isinstance(other, ConeModel) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"ConeModel({self.label})"

    @cached_property
    def A(self) -> np.ndarray:
        a = np.array(self.matrix, dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def A_inv(self) -> np.ndarray:
        a = np.linalg.inv(self.A)
        a.setflags(write=False)
        return a

    @cached_property
    def abs_det(self) -> float:
        return float(abs(np.linalg.det(self.A)))

    @cached_property
    def blocks(self) -> tuple[slice, ...]:
        out, start = [], 0
        for f in self.factors:
            out.append(slice(start, start + f.dim))
            start += f.dim
        return tuple(out)


def orthant(n: int, label: str | None = None) -> ConeModel:
    return ConeModel("orthant", int(n), label or f"orthant({int(n)})")


def lorentz(n: int, label: str | None = None) -> ConeModel:
    return ConeModel("lorentz", int(n), label or f"lorentz({int(n)})")


def simplicial(A, label: str | None = None) -> ConeModel:
    """The cone ``A * orthant``.  Raises if ``|det A| <= EPS_DET``."""
    a = np.asarray(A, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ConstructionError(f"simplicial cone needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConstructionError("simplicial matrix has non-finite entries")
    det = float(np.linalg.det(a))
    if abs(det) <= EPS_DET:
        raise ConstructionError(
            f"singular simplicial matrix: |det A| = {abs(det):.3g} <= eps_det = {EPS_DET:g}")
    n = a.shape[0]
    matrix = tuple(tuple(float(v) for v in row) for row in a)
    return ConeModel("simplicial", n, label or f"simplicial({n})", matrix=matrix)


def product(*factors: ConeModel, label: str | None = None) -> ConeModel:
    if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
        factors = tuple(factors[0])
    factors = tuple(factors)
    if not factors:
        raise ConstructionError("product cone needs at least one factor")
    dim = sum(f.dim for f in factors)
    return ConeModel("product", dim,
                     label or "product(" + ",".join(f.label for f in factors) + ")",
                     factors=factors)


# ---------------------------------------------------------------- points

def as_points(cone: ConeModel, x) -> tuple[np.ndarray, bool]:
    """Return ``(batch, single)`` with ``batch`` of shape ``(m, dim)``."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != cone.dim:
        raise DimensionError(f"point has dimension {arr.shape[-1]}, cone {cone.label} has {cone.dim}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("point has non-finite coordinates")
    return arr.reshape(-1, cone.dim), single


def _finish(values: np.ndarray, single: bool):
    return values[0] if single else values


def _lorentz_gap(X: np.ndarray) -> np.ndarray:
    return X[:, -1] - np.linalg.norm(X[:, :-1], axis=1)


def _margin(cone: ConeModel, X: np.ndarray) -> np.ndarray:
    """Signed quantity that is positive exactly on the open cone."""
    if cone.kind == "orthant":
        return X.min(axis=1)
    if cone.kind == "lorentz":
        return _lorentz_gap(X)
    if cone.kind == "simplicial":
        return (X @ cone.A_inv.T).min(axis=1)
    out = np.full(X.shape[0], np.inf)
    for f, b in zip(cone.factors, cone.blocks):
        out = np.minimum(out, _margin(f, X[:, b]))
    return out


def contains(cone: ConeModel, x):
    """True where ``x`` lies in the open cone."""
    X, single = as_points(cone, x)
    return _finish(_margin(cone, X) > 0, single)


def contains_closure(cone: ConeModel, x, tol: float = EPS_CLOSURE):
    """Membership in the closed cone up to ``tol`` (relative to ``1 + |x|``)."""
    X, single = as_points(cone, x)
    scale = 1.0 + np.linalg.norm(X, axis=1)
    return _finish(_margin(cone, X) > -tol * scale, single)


def require_inside(cone: ConeModel, x, what: str = "point") -> tuple[np.ndarray, bool]:
    X, single = as_points(cone, x)
    if not np.all(_margin(cone, X) > 0):
        raise OutsideConeError(f"{what} is not in the open cone {cone.label}")
    return X, single


def dual(cone: ConeModel) -> ConeModel:
    """Model of the dual cone ``{y : x.y > 0 for all nonzero x in the closure}``."""
    if cone.kind in ("orthant", "lorentz"):
        return cone
    if cone.kind == "simplicial":
        return simplicial(np.linalg.inv(cone.A).T, label=_dual_label(cone.label))
    return product(*(dual(f) for f in cone.factors), label=_dual_label(cone.label))


def _dual_label(label: str) -> str:
    m = re.fullmatch(r"dual\((.*)\)", label)
    return m.group(1) if m else f"dual({label})"


def _boundary_distance(cone: ConeModel, X: np.ndarray) -> np.ndarray:
    if cone.kind == "orthant":
        return X.min(axis=1)
    if cone.kind == "lorentz":
        return _lorentz_gap(X) / math.sqrt(2.0)
    if cone.kind == "simplicial":
        rows = cone.A_inv
        return (np.abs(X @ rows.T) / np.linalg.norm(rows, axis=1)).min(axis=1)
    out = np.full(X.shape[0], np.inf)
    for f, b in zip(cone.factors, cone.blocks):
        out = np.minimum(out, _boundary_distance(f, X[:, b]))
    return out


def boundary_distance(cone: ConeModel, x):
    """Euclidean distance from ``x`` (inside the cone) to the cone boundary."""
    X, single = require_inside(cone, x)
    return _finish(_boundary_distance(cone, X), single)


def cone_less(cone: ConeModel, x, y):
    """The cone order: ``x < y`` iff ``y - x`` is in the open cone."""
    X, _ = as_points(cone, x)
    Y, single = as_points(cone, y)
    single = single and np.asarray(x).ndim <= 1
    return _finish(_margin(cone, Y - X) > 0, single)


def in_interval(cone: ConeModel, a, b, x):
    """True where ``a < x < b`` in the cone order."""
    A, sa = as_points(cone, a)
    B, sb = as_points(cone, b)
    X, sx = as_points(cone, x)
    inside = (_margin(cone, X - A) > 0) & (_margin(cone, B - X) > 0)
    return _finish(inside, sa and sb and sx)


def center(cone: ConeModel) -> np.ndarray:
    """A canonical interior point (ones, the axis e_n, or their images)."""
    if cone.kind == "orthant":
        return np.ones(cone.dim)
    if cone.kind == "lorentz":
        e = np.zeros(cone.dim)
        e[-1] = 1.0
        return e
    if cone.kind == "simplicial":
        return cone.A @ np.ones(cone.dim)
    return np.concatenate([center(f) for f in cone.factors])


def random_points(cone: ConeModel, rng: np.random.Generator, size: int,
                  spread: float = 0.5) -> np.ndarray:
    """Interior points kept a moderate distance from the boundary."""
    if cone.kind == "orthant":
        return np.exp(spread * rng.standard_normal((size, cone.dim)))
    if cone.kind == "lorentz":
        xp = rng.standard_normal((size, cone.dim - 1))
        s = np.exp(spread * rng.standard_normal(size))
        xn = np.sqrt(np.sum(xp**2, axis=1) + s**2) + 0.5 * s
        return np.column_stack([xp, xn])
    if cone.kind == "simplicial":
        return np.exp(spread * rng.standard_normal((size, cone.dim))) @ cone.A.T
    return np.concatenate([random_points(f, rng, size, spread) for f in cone.factors], axis=1)


# ---------------------------------------------------------------- lorentz boosts

def lorentz_boost(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boosts ``L`` with ``L @ (0, ..., 0, h) = x`` where ``h = sqrt(q(x))``.

    Returns ``(L, h)`` with shapes ``(m, n, n)`` and ``(m,)``.  Boosts have unit
    determinant and preserve the cone, so they map intervals onto intervals.
    """
    xp, xn = X[:, :-1], X[:, -1]
    r = np.linalg.norm(xp, axis=1)
    h = np.sqrt((xn - r) * (xn + r))
    v = xp / xn[:, None]
    g = xn / h
    m, n = X.shape
    L = np.zeros((m, n, n))
    L[:, :-1, :-1] = np.eye(n - 1) + (g**2 / (g + 1.0))[:, None, None] * v[:, :, None] * v[:, None, :]
    L[:, :-1, -1] = g[:, None] * v
    L[:, -1, :-1] = g[:, None] * v
    L[:, -1, -1] = g
    return L, h


# ---------------------------------------------------------------- interval geometry

def _interval_box(cone: ConeModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    zero = np.zeros_like(X)
    if cone.kind == "orthant":
        return zero, X.copy()
    if cone.kind == "simplicial":
        parts = cone.A[None, :, :] * (X @ cone.A_inv.T)[:, None, :]
        return np.minimum(parts, 0).sum(axis=2), np.maximum(parts, 0).sum(axis=2)
    if cone.kind == "lorentz":
        L, h = lorentz_boost(X)
        spatial = np.linalg.norm(L[:, :, :-1], axis=2)
        rim_lo = 0.5 * h[:, None] * (L[:, :, -1] - spatial)
        rim_hi = 0.5 * h[:, None] * (L[:, :, -1] + spatial)
        return (np.minimum(np.minimum(zero, X), rim_lo),
                np.maximum(np.maximum(zero, X), rim_hi))
    lo, hi = np.empty_like(X), np.empty_like(X)
    for f, b in zip(cone.factors, cone.blocks):
        lo[:, b], hi[:, b] = _interval_box(f, X[:, b])
    return lo, hi


def interval_box(cone: ConeModel, x):
    """Axis-aligned bounding box ``(lo, hi)`` of the interval from 0 to ``x``."""
    X, single = require_inside(cone, x)
    lo, hi = _interval_box(cone, X)
    return (lo[0], hi[0]) if single else (lo, hi)


def _sample_intervals(cone: ConeModel, X: np.ndarray, rng: np.random.Generator,
                      k: int) -> np.ndarray:
    """Exact uniform samples, ``k`` per endpoint, shape ``(m, k, n)``."""
    m, n = X.shape
    if cone.kind == "orthant":
        return rng.random((m, k, n)) * X[:, None, :]
    if cone.kind == "simplicial":
        Z = rng.random((m, k, n)) * (X @ cone.A_inv.T)[:, None, :]
        return Z @ cone.A.T
    if cone.kind == "lorentz":
        L, h = lorentz_boost(X)
        t = 0.5 * rng.random((m, k)) ** (1.0 / n)
        g = rng.standard_normal((m, k, n - 1))
        g /= np.linalg.norm(g, axis=2, keepdims=True)
        radius = t * rng.random((m, k)) ** (1.0 / (n - 1))
        upper = rng.random((m, k)) < 0.5
        Y0 = np.empty((m, k, n))
        Y0[:, :, :-1] = g * radius[:, :, None]
        Y0[:, :, -1] = np.where(upper, 1.0 - t, t)
        Y0 *= h[:, None, None]
        return np.einsum("mij,mkj->mki", L, Y0)
    out = np.empty((m, k, n))
    for f, b in zip(cone.factors, cone.blocks):
        out[:, :, b] = _sample_intervals(f, X[:, b], rng, k)
    return out


def sample_intervals(cone: ConeModel, X, rng: np.random.Generator, k: int) -> np.ndarray:
    """``k`` uniform samples on each interval from 0 to ``X[i]``; shape ``(m, k, n)``."""
    Xb, _ = require_inside(cone, X, "interval endpoint")
    return _sample_intervals(cone, Xb, rng, int(k))


def sample_interval(cone: ConeModel, x, rng: np.random.Generator, size: int | None = None,
                    method: str = "auto", max_rejections: int = MAX_REJECTIONS,
                    return_acceptance: bool = False):
    """Uniform samples on the interval from 0 to ``x``.

    ``method="auto"`` uses an exact sampler for every kind: scaled uniforms for
    the orthant and its linear images, a boosted double cone for the Lorentz
    cone and blockwise sampling for products.  ``method="rejection"`` draws
    from the bounding box and keeps points inside the interval; it raises
    :class:`RejectionBudgetExhausted` after ``max_rejections`` attempts per
    requested sample.
    """
    X, _ = require_inside(cone, x, "interval endpoint")
    if X.shape[0] != 1:
        raise DimensionError("sample_interval takes one endpoint; use sample_intervals for batches")
    count = 1 if size is None else int(size)
    if method == "auto":
        Y = _sample_intervals(cone, X, rng, count)[0]
        acceptance = 1.0
    elif method == "rejection":
        Y, acceptance = _reject_interval(cone, X[0], rng, count, max_rejections)
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    Y = Y[0] if size is None else Y
    return (Y, acceptance) if return_acceptance else Y


def _reject_interval(cone, x, rng, count, max_rejections):
    lo, hi = _interval_box(cone, x[None, :])
    lo, hi = lo[0], hi[0]
    if not np.all(hi > lo):
        raise ValueError("degenerate bounding box for the interval")
    budget = max_rejections * count
    accepted, tried = [], 0
    have = 0
    batch = max(64, 2 * count)
    while have < count:
        if tried >= budget:
            raise RejectionBudgetExhausted(
                f"interval sampler accepted {have}/{count} after {tried} draws")
        m = min(batch, budget - tried)
        Y = lo + (hi - lo) * rng.random((m, cone.dim))
        ok = (_margin(cone, Y) > 0) & (_margin(cone, x - Y) > 0)
        tried += m
        accepted.append(Y[ok])
        have += int(ok.sum())
    Y = np.concatenate(accepted)[:count]
    return Y, have / tried


def sphere(rng: np.random.Generator, shape, n: int) -> np.ndarray:
    """Uniform points on the unit sphere in ``R^n``; output shape ``(*shape, n)``."""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    g = rng.standard_normal((*shape, n))
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    while np.any(norm == 0):
        g = np.where(norm == 0, rng.standard_normal(g.shape), g)
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
    return g / norm


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in ``R^n`` (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def sample_section(cone: ConeModel, rng: np.random.Generator, size: int | None = None,
                   max_rejections: int = MAX_REJECTIONS, return_acceptance: bool = False):
    """Uniform points on the section ``V ∩ S^{n-1}`` by rejection from the sphere."""
    count = 1 if size is None else int(size)
    budget = max_rejections * count
    kept, have, tried = [], 0, 0
    batch = max(64, 4 * count)
    while have < count:
        if tried >= budget:
            raise RejectionBudgetExhausted(f"section sampler accepted {have}/{count} after {tried} draws")
        m = min(batch, budget - tried)
        T = sphere(rng, m, cone.dim)
        ok = _margin(cone, T) > 0
        tried += m
        kept.append(T[ok])
        have += int(ok.sum())
    T = np.concatenate(kept)[:count]
    T = T[0] if size is None else T
    return (T, have / tried) if return_acceptance else T


# ---------------------------------------------------------------- serialization

def to_json(cone: ConeModel) -> dict:
    out = {"kind": cone.kind, "dim": cone.dim, "label": cone.label}
    if cone.kind == "simplicial":
        out["matrix"] = [list(row) for row in cone.matrix]
    if cone.kind == "product":
        out["factors"] = [to_json(f) for f in cone.factors]
    return out


def from_json(data) -> ConeModel:
    """Build a cone from its JSON object or from a short string like ``"lorentz(3)"``."""
    if isinstance(data, ConeModel):
        return data
    if isinstance(data, str):
        text = data.strip()
        if text.startswith("{"):
            return from_json(json.loads(text))
        return parse_cone(text)
    if not isinstance(data, dict) or "kind" not in data:
        raise ConstructionError(f"cone spec must be an object with a 'kind', got {data!r}")
    kind, label = data["kind"], data.get("label")
    if kind == "orthant":
        return orthant(int(data["dim"]), label)
    if kind == "lorentz":
        return lorentz(int(data["dim"]), label)
    if kind == "simplicial":
        if "matrix" not in data:
            raise ConstructionError("simplicial cone spec needs a 'matrix'")
        cone = simplicial(data["matrix"], label)
        if "dim" in data and int(data["dim"]) != cone.dim:
            raise ConstructionError("simplicial 'dim' disagrees with the matrix size")
        return cone
    if kind == "product":
        cone = product(*(from_json(f) for f in data.get("factors", [])), label=label)
        if "dim" in data and int(data["dim"]) != cone.dim:
            raise ConstructionError("product 'dim' disagrees with its factors")
        return cone
    raise ConstructionError(f"unknown cone kind {kind!r}")


_SHORT = re.compile(r"(orthant|lorentz)\((\d+)\)")


def parse_cone(text: str) -> ConeModel:
    """Parse ``orthant(n)``, ``lorentz(n)`` or ``product(a,b,...)`` of those."""
    text = text.replace(" ", "")
    m = _SHORT.fullmatch(text)
    if m:
        return orthant(int(m.group(2))) if m.group(1) == "orthant" else lorentz(int(m.group(2)))
    if text.startswith("product(") and text.endswith(")"):
        inner = text[len("product("):-1]
        parts = _SHORT.findall(inner)
        rebuilt = ",".join(f"{k}({d})" for k, d in parts)
        if rebuilt != inner:
            raise ConstructionError(f"cannot parse cone {text!r}")
        return product(*(parse_cone(f"{k}({d})") for k, d in parts))
    raise ConstructionError(f"cannot parse cone {text!r}")
