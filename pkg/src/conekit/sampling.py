"""Importance samplers for integrals over a whole cone.

An integral over the cone is written in polar form,
``int_V g = int_{S^(n-1) ∩ V} int_0^inf g(rho t) rho^(n-1) drho dt``.
Directions ``t`` are uniform on the sphere (weight 0 outside the cone) and
the radius is drawn from a Gamma law or from a log-Cauchy law.  Every draw
carries its exact importance weight, so the proposal only affects variance.
Each sampler returns points ``Y`` and weights ``w`` with ``E[w g(Y)] = int_V g``.
"""
from __future__ import annotations

import math

import numpy as np

from .cones import ConeModel, _margin, center, sphere, sphere_area

LOG_CAUCHY_HALF_WIDTH = 60.0


def directions(cone: ConeModel, rng: np.random.Generator, shape) -> tuple[np.ndarray, np.ndarray]:
    """Uniform sphere directions and their weights ``|S^(n-1)| 1[t in V]``.

    On the line the cone is a half-line; its single direction gets weight 1.
    """
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    n = cone.dim
    if n == 1:
        c = center(cone)
        T = np.broadcast_to(c / abs(c[0]), (*shape, 1)).copy()
        return T, np.ones(shape)
    T = sphere(rng, shape, n)
    inside = (_margin(cone, T.reshape(-1, n)) > 0).reshape(shape)
    return T, np.where(inside, sphere_area(n), 0.0)


def radial_gamma(cone: ConeModel, rng: np.random.Generator, shape, gamma_shape: float,
                 rate_vec) -> tuple[np.ndarray, np.ndarray]:
    """Radius ``~ Gamma(gamma_shape, rate = rate_vec . t)`` along each direction.

    ``rate_vec`` must lie in the dual cone (broadcastable to ``(*shape, n)``)
    so the rate is positive on every admissible direction.
    """
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    n = cone.dim
    a = float(gamma_shape)
    T, wdir = directions(cone, rng, shape)
    rate = np.sum(T * np.asarray(rate_vec, dtype=float), axis=-1)
    ok = (wdir > 0) & (rate > 0)
    safe_rate = np.where(ok, rate, 1.0)
    rho = rng.standard_gamma(a, size=shape) / safe_rate
    rho = np.maximum(rho, np.finfo(float).tiny)
    log_w = math.lgamma(a) + (n - a) * np.log(rho) - a * np.log(safe_rate) + rho * safe_rate
    w = np.where(ok, wdir * np.exp(log_w), 0.0)
    return rho[..., None] * T, w


def radial_log_cauchy(cone: ConeModel, rng: np.random.Generator, shape, loc=0.0,
                      scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """``log rho ~ Cauchy(loc, scale)`` truncated to ``|log rho - loc| <= 60``.

    Heavy tails in ``log rho`` suit integrands with power behaviour at both 0
    and infinity.  The truncation drops radii outside ``e^(loc +- 60)``.
    """
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    n = cone.dim
    T, wdir = directions(cone, rng, shape)
    half = LOG_CAUCHY_HALF_WIDTH
    mass = (2.0 / math.pi) * math.atan(half / scale)
    u = rng.random(shape)
    z0 = scale * np.tan((u - 0.5) * mass * math.pi)
    z = np.asarray(loc, dtype=float) + z0
    log_pz = -math.log(math.pi * scale * mass) - np.log1p((z0 / scale) ** 2)
    w = wdir * np.exp(n * z - log_pz)
    return np.exp(z)[..., None] * T, w
