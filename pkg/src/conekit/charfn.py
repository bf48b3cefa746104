"""Interval volume ``delta``, characteristic function ``phi`` and critical exponents.

``delta(x)`` is the volume of the cone interval from 0 to ``x`` and
``phi(x)`` is the integral of ``exp(-x.y)`` over the dual cone.  Both have
closed forms for the built-in cones; the ``*_mc`` estimators are independent
Monte Carlo cross-checks.

``sigma0`` is the infimum of the exponents ``alpha`` for which ``delta^alpha``
is integrable over the spherical section of the cone, and ``sigma`` is
``max(-1, sigma0)``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import calibration
from .cones import (ConeModel, _interval_box, _margin, as_points, center, dual, require_inside,
                    sphere, sphere_area)
from .mc import McConfig, McEstimate, Moments, map_chunks, reduce_moments, to_estimate, integrate

DIVERGENCE_RATIO = 1.5
TRUNCATION_POWER = 16


# ---------------------------------------------------------------- closed forms

def _lorentz_q(X: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(X[:, :-1], axis=1)
    return (X[:, -1] - r) * (X[:, -1] + r)


def _log_delta(cone: ConeModel, X: np.ndarray) -> np.ndarray:
    if cone.kind == "orthant":
        return np.sum(np.log(X), axis=1)
    if cone.kind == "lorentz":
        n = cone.dim
        return math.log(calibration.lorentz_constant(n, "delta")) + 0.5 * n * np.log(_lorentz_q(X))
    if cone.kind == "simplicial":
        return math.log(cone.abs_det) + np.sum(np.log(X @ cone.A_inv.T), axis=1)
    return sum(_log_delta(f, X[:, b]) for f, b in zip(cone.factors, cone.blocks))


def _log_phi(cone: ConeModel, X: np.ndarray) -> np.ndarray:
    if cone.kind == "orthant":
        return -np.sum(np.log(X), axis=1)
    if cone.kind == "lorentz":
        n = cone.dim
        return math.log(calibration.lorentz_constant(n, "phi")) - 0.5 * n * np.log(_lorentz_q(X))
    if cone.kind == "simplicial":
        return -math.log(cone.abs_det) - np.sum(np.log(X @ cone.A_inv.T), axis=1)
    return sum(_log_phi(f, X[:, b]) for f, b in zip(cone.factors, cone.blocks))


def log_delta(cone: ConeModel, x):
    """Natural log of ``delta``; raises for points outside the open cone."""
    X, single = require_inside(cone, x)
    out = _log_delta(cone, X)
    return out[0] if single else out


def delta(cone: ConeModel, x):
    """Volume of the interval from 0 to ``x``.

    Examples
    --------
    >>> from conekit.cones import orthant
    >>> float(delta(orthant(2), [2.0, 3.0]))
    6.0
    """
    return np.exp(log_delta(cone, x))


def log_phi(cone: ConeModel, x):
    X, single = require_inside(cone, x)
    out = _log_phi(cone, X)
    return out[0] if single else out


def phi(cone: ConeModel, x):
    """Characteristic function: the integral of ``exp(-x.y)`` over the dual cone."""
    return np.exp(log_phi(cone, x))


def delta_power(cone: ConeModel, Y: np.ndarray, power: float) -> np.ndarray:
    """``delta(y)^power`` on the cone and 0 outside it (batch, no raising)."""
    Y = np.asarray(Y, dtype=float).reshape(-1, cone.dim)
    out = np.zeros(Y.shape[0])
    inside = _margin(cone, Y) > 0
    if np.any(inside):
        out[inside] = np.exp(power * _log_delta(cone, Y[inside]))
    return out


# ---------------------------------------------------------------- Monte Carlo

def delta_mc(cone: ConeModel, x, mc: McConfig) -> McEstimate:
    """Bounding-box volume times the hit rate of uniform box points in the interval."""
    X, _ = require_inside(cone, x)
    lo, hi = _interval_box(cone, X)
    lo, hi = lo[0], hi[0]
    if not np.all(hi > lo):
        raise ValueError("degenerate bounding box for the interval")
    vol = float(np.prod(hi - lo))
    xv = X[0]

    def weights(rng, m):
        Y = lo + (hi - lo) * rng.random((m, cone.dim))
        hit = (_margin(cone, Y) > 0) & (_margin(cone, xv - Y) > 0)
        return vol * hit

    return integrate(weights, mc, key=("delta_mc", cone.label))


def phi_mc(cone: ConeModel, x, mc: McConfig) -> McEstimate:
    """Polar Monte Carlo estimate of ``phi``.

    Directions ``t`` are uniform on the unit sphere; directions outside the
    dual cone get weight 0.  Along each admissible ray the radial integral of
    ``rho^(n-1) exp(-rho x.t)`` is ``Gamma(n) (x.t)^-n``, which is what a Gamma
    radial proposal matched to the ray would return for every draw, so the
    radial part is taken exactly.
    """
    X, _ = require_inside(cone, x)
    xv = X[0]
    n = cone.dim
    vd = dual(cone)
    scale = sphere_area(n) * math.gamma(n)

    def weights(rng, m):
        T = sphere(rng, m, n)
        ok = _margin(vd, T) > 0
        w = np.zeros(m)
        w[ok] = scale * (T[ok] @ xv) ** (-n)
        return w

    parts = map_chunks(lambda rng, m, i: Moments.of(weights(rng, m)), mc, ("phi_mc", cone.label))
    return to_estimate(reduce_moments(parts))


# ---------------------------------------------------------------- critical exponents

@dataclass(frozen=True)
class AlphaClass:
    alpha: float
    small: float
    large: float
    ratio: float
    divergent: bool


@dataclass(frozen=True)
class SigmaReport:
    """Critical exponent report; ``sigma0 = -inf`` when every exponent is integrable."""

    sigma0: float
    sigma: float
    method: str
    bracket: tuple[float, float] | None = None
    one_sided: bool = False
    classes: tuple[AlphaClass, ...] = field(default=())
    warning: str | None = None

    def contains(self, value: float) -> bool:
        if self.bracket is None:
            return math.isclose(self.sigma0, value, abs_tol=1e-12)
        lo, hi = self.bracket
        return lo <= value <= hi

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
            if isinstance(v, (list, tuple)):
                return [clean(u) for u in v]
            if isinstance(v, dict):
                return {k: clean(u) for k, u in v.items()}
            return v
        return clean(asdict(self))


def _closed_sigma0(cone: ConeModel) -> float:
    if cone.dim == 1:
        return -math.inf
    if cone.kind in ("orthant", "simplicial"):
        return -1.0
    if cone.kind == "lorentz":
        return -2.0 / cone.dim
    if len(cone.factors) == 1:
        return _closed_sigma0(cone.factors[0])
    return max(-1.0, max(_closed_sigma0(f) for f in cone.factors))


def sigma0(cone: ConeModel) -> SigmaReport:
    """Closed-form critical exponents.

    Products take ``max(-1, max_i sigma0(V_i))``: a factor boundary costs that
    factor's threshold and a whole block shrinking to 0 costs ``-1``.

    Examples
    --------
    >>> from conekit.cones import lorentz
    >>> round(sigma0(lorentz(3)).sigma0, 6)
    -0.666667
    """
    s0 = _closed_sigma0(cone)
    return SigmaReport(sigma0=s0, sigma=max(-1.0, s0), method="closed_form")


def sigma(cone: ConeModel) -> float:
    return sigma0(cone).sigma


def _facets(cone: ConeModel) -> np.ndarray:
    return np.eye(cone.dim) if cone.kind == "orthant" else np.asarray(cone.A_inv)


def _exit_radius(cone: ConeModel, c: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Distance along each row of ``U`` from ``c`` to the cone boundary (inf if none)."""
    if cone.kind in ("orthant", "simplicial"):
        F = _facets(cone)
        lc, lu = F @ c, U @ F.T
        with np.errstate(divide="ignore"):
            t = np.where(lu < 0, -lc / np.where(lu < 0, lu, -1.0), np.inf)
        return t.min(axis=1)
    if cone.kind == "lorentz":
        qc, B, Q = _lorentz_line(c, U)
        D = B * B - Q * qc
        root = np.sqrt(np.maximum(D, 0.0))
        den = -B + root
        with np.errstate(divide="ignore"):
            return np.where((D >= 0) & (den > 0), qc / np.where(den > 0, den, 1.0), np.inf)
    out = np.full(U.shape[0], np.inf)
    for f, b in zip(cone.factors, cone.blocks):
        out = np.minimum(out, _exit_radius(f, c[b], U[:, b]))
    return out


def _lorentz_line(c, U):
    qc = c[-1] ** 2 - c[:-1] @ c[:-1]
    B = c[-1] * U[:, -1] - U[:, :-1] @ c[:-1]
    Q = U[:, -1] ** 2 - np.sum(U[:, :-1] ** 2, axis=1)
    return qc, B, Q


def _log_delta_line(cone: ConeModel, c, U, r, gap, rho) -> np.ndarray:
    """``log delta(c + r u)`` where ``gap = rho - r`` is known to full precision.

    The coordinate that vanishes at the exit point is rebuilt from ``gap`` so
    the integrand stays accurate extremely close to the boundary.
    """
    finite = np.isfinite(rho)
    if cone.kind in ("orthant", "simplicial"):
        F = _facets(cone)
        lu = U @ F.T
        L = F @ c + r[:, None] * lu
        if np.any(finite):
            lc = F @ c
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(lu < 0, -lc / np.where(lu < 0, lu, -1.0), np.inf)
            j = np.argmin(t, axis=1)
            idx = np.nonzero(finite)[0]
            L[idx, j[idx]] = -gap[idx] * lu[idx, j[idx]]
        base = math.log(cone.abs_det) if cone.kind == "simplicial" else 0.0
        return base + np.sum(np.log(L), axis=1)
    if cone.kind == "lorentz":
        n = cone.dim
        qc, B, Q = _lorentz_line(c, U)
        Y = c + r[:, None] * U
        q = _lorentz_q(Y)
        if np.any(finite):
            root = np.sqrt(np.maximum(B * B - Q * qc, 0.0))
            q = np.where(finite, gap * (gap * Q + 2.0 * root), q)
        return math.log(calibration.lorentz_constant(n, "delta")) + 0.5 * n * np.log(q)
    total = np.zeros(U.shape[0])
    for f, b in zip(cone.factors, cone.blocks):
        rho_f = _exit_radius(f, c[b], U[:, b])
        gap_f = np.where(np.isfinite(rho_f), (rho_f - rho) + gap, np.inf)
        total += _log_delta_line(f, c[b], U[:, b], r, gap_f, rho_f)
    return total


def _slice_frame(cone: ConeModel):
    """Centre and orthonormal frame of the affine slice ``{y : e.y = 1}``."""
    e = center(dual(cone))
    e = e / np.linalg.norm(e)
    c = center(cone)
    c = c / (e @ c)
    _, _, vt = np.linalg.svd(e[None, :])
    return c, vt[1:]


def section_integral(cone: ConeModel, alpha: float, mc: McConfig, u_min: float,
                     key=0) -> McEstimate:
    """Integral of ``delta^alpha`` over the section with a boundary layer removed.

    The section is projected from the flat slice ``{e.y = 1}`` (``e`` the unit
    dual centre), which turns the integrand into
    ``delta(y)^alpha |y|^(-n(alpha+1))``.  The slice is swept in polar
    coordinates about its centre; along each ray the layer of relative
    thickness ``u_min`` next to the boundary is dropped.  The radial proposal
    mixes ``r^(d-1)`` with a log-uniform law in the gap to the boundary, so
    every depth down to ``u_min`` is sampled.
    """
    n = cone.dim
    d = n - 1
    c, W = _slice_frame(cone)
    area = sphere_area(d)
    log_span = -math.log(u_min)

    def weights(rng, m):
        w = sphere(rng, m, d)
        U = w @ W
        rho = _exit_radius(cone, c, U)
        near = rng.random(m) < 0.5
        v = rng.random(m)
        gap = np.where(near, rho * np.exp(-log_span * v), rho * (1.0 - v ** (1.0 / d)))
        r = rho - gap
        keep = (gap >= u_min * rho) & (r > 0)
        r_safe = np.where(keep, r, 0.5 * rho)
        gap_safe = np.where(keep, gap, 0.5 * rho)
        Y = c + r_safe[:, None] * U
        log_h = (alpha * _log_delta_line(cone, c, U, r_safe, gap_safe, rho)
                 - n * (alpha + 1.0) * np.log(np.linalg.norm(Y, axis=1))
                 + (d - 1) * np.log(r_safe))
        dens = (0.5 * d * r_safe ** (d - 1) / rho ** d
                + 0.5 / (gap_safe * log_span) * (gap_safe >= u_min * rho))
        return np.where(keep, area * np.exp(log_h) / dens, 0.0)

    parts = map_chunks(lambda rng, m, i: Moments.of(weights(rng, m)), mc,
                       ("section", cone.label, float(alpha), key))
    return to_estimate(reduce_moments(parts), ess_floor=0.0)


def sigma0_estimate(cone: ConeModel, alphas, mc: McConfig) -> SigmaReport:
    """Bracket ``sigma0`` from a grid of exponents.

    For each ``alpha`` the truncated section integral is estimated with
    ``N = mc.samples`` draws and layer ``N^-16`` and again with ``4N`` draws
    and layer ``(4N)^-16`` on an independent stream.  Exponents whose estimate
    grows by more than :data:`DIVERGENCE_RATIO` are classified divergent.
    The bracket is the split of the sorted grid that disagrees with the
    fewest classifications; it is one-sided when every exponent falls on the
    same side.
    """
    grid = sorted(float(a) for a in alphas)
    if not grid:
        raise ValueError("sigma0_estimate needs a non-empty alpha grid")
    if cone.dim == 1:
        return SigmaReport(-math.inf, -1.0, "estimated", (-math.inf, grid[0]), True, (),
                           "the section is a single point; every exponent is integrable")
    classes = []
    big = mc.with_samples(4 * mc.samples)
    for a in grid:
        small = section_integral(cone, a, mc, float(mc.samples) ** -TRUNCATION_POWER, key=0)
        large = section_integral(cone, a, big, float(big.samples) ** -TRUNCATION_POWER, key=1)
        ratio = large.value / small.value if small.value > 0 else math.inf
        divergent = (not math.isfinite(large.value)) or ratio > DIVERGENCE_RATIO
        classes.append(AlphaClass(a, small.value, large.value, ratio, bool(divergent)))
    flags = [c.divergent for c in classes]
    best_k, best_err = 0, None
    for k in range(len(grid) + 1):
        err = sum(not f for f in flags[:k]) + sum(f for f in flags[k:])
        if best_err is None or err < best_err:
            best_k, best_err = k, err
    lo = grid[best_k - 1] if best_k > 0 else -math.inf
    hi = grid[best_k] if best_k < len(grid) else math.inf
    one_sided = best_k in (0, len(grid))
    if math.isfinite(lo) and math.isfinite(hi):
        s0 = 0.5 * (lo + hi)
    else:
        s0 = hi if math.isfinite(hi) else lo
    warning = None
    if best_err:
        warning = f"{best_err} exponent(s) classified against the bracket"
    if one_sided:
        warning = ((warning + "; ") if warning else "") + "all exponents on one side of the bracket"
    return SigmaReport(s0, max(-1.0, s0), "estimated", (lo, hi), one_sided, tuple(classes), warning)
