"""The star map ``x* = -grad log phi(x)``, its Jacobian and the self-dual fixed point."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .charfn import _log_delta, _log_phi
from .cones import ConeModel, _boundary_distance, _margin, as_points, center, dual, require_inside
from .errors import ConvergenceError, StencilError


@dataclass(frozen=True)
class StarResult:
    x_star: np.ndarray
    method: str
    residual_euler: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x_star"] = [float(v) for v in self.x_star]
        return d


def fd_step(x: np.ndarray) -> float:
    """Default finite-difference step ``max(1e-6, 1e-6 |x|)``."""
    return max(1e-6, 1e-6 * float(np.linalg.norm(x)))


def _guard(cone: ConeModel, X: np.ndarray, h: float) -> None:
    dist = _boundary_distance(cone, X)
    if np.any(dist <= 10.0 * h):
        raise StencilError(
            f"point within {10 * h:.3g} of the boundary of {cone.label}; "
            "finite-difference stencil would leave the cone, use a point deeper inside")


def _star(cone: ConeModel, X: np.ndarray) -> np.ndarray:
    if cone.kind == "orthant":
        return 1.0 / X
    if cone.kind == "lorentz":
        n = cone.dim
        r = np.linalg.norm(X[:, :-1], axis=1)
        q = (X[:, -1] - r) * (X[:, -1] + r)
        out = X.copy()
        out[:, :-1] *= -1.0
        return (n / q)[:, None] * out
    if cone.kind == "simplicial":
        return (1.0 / (X @ cone.A_inv.T)) @ cone.A_inv
    out = np.empty_like(X)
    for f, b in zip(cone.factors, cone.blocks):
        out[:, b] = _star(f, X[:, b])
    return out


def star(cone: ConeModel, x) -> StarResult:
    """Closed-form star map; the result lies in the dual cone.

    Examples
    --------
    >>> from conekit.cones import orthant
    >>> star(orthant(2), [2.0, 4.0]).x_star.tolist()
    [0.5, 0.25]
    """
    X, _ = require_inside(cone, x)
    _guard(cone, X, fd_step(X[0]))
    xs = _star(cone, X)[0]
    return StarResult(xs, "closed_form", abs(float(xs @ X[0]) - cone.dim))


def star_points(cone: ConeModel, X) -> np.ndarray:
    """Batch closed-form star map without the stencil guard."""
    Xb, single = require_inside(cone, X)
    out = _star(cone, Xb)
    return out[0] if single else out


def star_fd(cone: ConeModel, x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient of ``-log phi`` with step ``h * max(1, |x|)``."""
    X, _ = require_inside(cone, x)
    xv = X[0]
    h = fd_step(xv) if h is None else float(h)
    step = h * max(1.0, float(np.linalg.norm(xv)))
    if _boundary_distance(cone, X)[0] <= max(10.0 * h, step):
        raise StencilError(f"stencil of radius {step:.3g} leaves {cone.label}; move x inward")
    E = np.eye(cone.dim) * step
    plus = _log_phi(cone, xv + E)
    minus = _log_phi(cone, xv - E)
    return -(plus - minus) / (2.0 * step)


def star_fd_result(cone: ConeModel, x, h: float | None = None) -> StarResult:
    xs = star_fd(cone, x, h)
    X, _ = as_points(cone, x)
    return StarResult(xs, "finite_difference", abs(float(xs @ X[0]) - cone.dim))


def jacobian_K(cone: ConeModel, x) -> np.ndarray:
    """``K(x) = -d x*/dx``: analytic for the orthant, central differences otherwise."""
    X, _ = require_inside(cone, x)
    xv = X[0]
    h = fd_step(xv)
    _guard(cone, X, h)
    if cone.kind == "orthant":
        return np.diag(1.0 / xv**2)
    step = h * max(1.0, float(np.linalg.norm(xv)))
    E = np.eye(cone.dim) * step
    cols = (_star(cone, xv + E) - _star(cone, xv - E)) / (2.0 * step)
    return -cols.T


def duality_products(cone: ConeModel, X) -> tuple[np.ndarray, np.ndarray]:
    """``delta(x) delta*(x*)`` and ``phi(x) phi*(x*)`` for a batch of points."""
    Xb, _ = require_inside(cone, X)
    vd = dual(cone)
    S = _star(cone, Xb)
    return (np.exp(_log_delta(cone, Xb) + _log_delta(vd, S)),
            np.exp(_log_phi(cone, Xb) + _log_phi(vd, S)))


def fixed_point(cone: ConeModel, tol: float = 1e-10, max_iters: int = 500) -> np.ndarray:
    """A point with ``x* = x`` for a self-dual cone.

    ``log phi`` is minimised on the sphere ``|x|^2 = n`` inside the cone by
    projected gradient descent with backtracking; at the minimiser ``x*`` is
    parallel to ``x`` and the Euler identity ``x*.x = n`` makes them equal.
    A few Newton steps on ``x* - x = 0`` polish the result.
    """
    if dual(cone) != cone:
        raise ValueError(f"{cone.label} is not self-dual; x = x* has no solution in general")
    n = cone.dim
    radius = math.sqrt(n)
    x = center(cone)
    x = radius * x / np.linalg.norm(x)

    def f(v):
        return float(_log_phi(cone, v[None, :])[0])

    def inside(v):
        return bool(_margin(cone, v[None, :])[0] > 0)

    step = 1.0
    for _ in range(max_iters):
        g = -_star(cone, x[None, :])[0]
        tangent = g - (g @ x) / (x @ x) * x
        if np.linalg.norm(tangent) < 1e-13:
            break
        fx = f(x)
        while step > 1e-16:
            trial = x - step * tangent
            trial = radius * trial / np.linalg.norm(trial)
            if inside(trial) and f(trial) <= fx - 1e-4 * step * float(tangent @ tangent):
                x = trial
                step *= 2.0
                break
            step *= 0.5
        else:
            break
    for _ in range(50):
        r = _star(cone, x[None, :])[0] - x
        if np.linalg.norm(r) < 0.01 * tol:
            break
        K = jacobian_K(cone, x)
        x = x + np.linalg.solve(K + np.eye(n), r)
        if not inside(x):
            raise ConvergenceError("Newton polish left the cone", last=x)
    resid = float(np.linalg.norm(_star(cone, x[None, :])[0] - x))
    if resid >= tol:
        raise ConvergenceError(f"fixed point residual {resid:.3g} above {tol:g}", last=x)
    return x

