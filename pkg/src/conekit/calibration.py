"""Normalising constants for the Lorentz cone, computed once and cached.

For ``lorentz(n)`` the interval volume and the characteristic function are
``delta(x) = c_n q(x)^{n/2}`` and ``phi(x) = k_n q(x)^{-n/2}`` with
``q(x) = x_n^2 - |x'|^2``.  Both constants are fixed at the reference point
``e_n`` by one-dimensional adaptive quadrature:

* ``c_n`` is the volume of the double cone ``{|y'| < min(y_n, 1 - y_n)}``,
  i.e. the integral of ``omega_{n-1} min(t, 1-t)^{n-1}`` over ``(0, 1)``.
* ``k_n`` is the integral of ``exp(-y_n)`` over the cone, i.e. the integral
  of ``omega_{n-1} t^{n-1} e^{-t}`` over ``(0, inf)``.

Here ``omega_d`` is the volume of the unit ball in ``R^d``.  Results live in
a JSON file at ``$CONEKIT_CACHE`` (default ``~/.cache/conekit/calibration.json``)
keyed by cone label; a missing or unreadable file is recomputed silently.
"""
from __future__ import annotations

import json
import math
import os
import threading
from pathlib import Path

from scipy import integrate

TARGET_ACCURACY = 1e-10
_LOCK = threading.Lock()
_MEMO: dict[tuple[str, str], float] = {}


def cache_path() -> Path:
    env = os.environ.get("CONEKIT_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "conekit" / "calibration.json"


def ball_volume(d: int) -> float:
    """Volume of the unit ball in ``R^d``."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _quad_delta(n: int) -> tuple[float, float]:
    w = ball_volume(n - 1)
    half, err = integrate.quad(lambda t: w * t ** (n - 1), 0.0, 0.5,
                               epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * half, 2.0 * err


def _quad_phi(n: int) -> tuple[float, float]:
    w = ball_volume(n - 1)
    val, err = integrate.quad(lambda t: w * t ** (n - 1) * math.exp(-t), 0.0, math.inf,
                              epsabs=0.0, epsrel=1e-13, limit=200)
    return val, err


_QUADRATURES = {"delta": _quad_delta, "phi": _quad_phi}


def _read(path: Path) -> dict:
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError):
        return {}
    return data if isinstance(data, dict) else {}


def _valid(entry) -> bool:
    if not isinstance(entry, dict):
        return False
    value, acc = entry.get("constant"), entry.get("accuracy")
    return (isinstance(value, (int, float)) and math.isfinite(value) and value > 0
            and isinstance(acc, (int, float)) and acc <= TARGET_ACCURACY)


def lorentz_constant(n: int, which: str) -> float:
    """``c_n`` (``which="delta"``) or ``k_n`` (``which="phi"``) for ``lorentz(n)``."""
    if which not in _QUADRATURES:
        raise ValueError(f"unknown constant {which!r}")
    n = int(n)
    if n < 2:
        raise ValueError("lorentz constants need n >= 2")
    label = f"lorentz({n})"
    memo_key = (label, which)
    if memo_key in _MEMO:
        return _MEMO[memo_key]
    with _LOCK:
        path = cache_path()
        data = _read(path)
        entry = data.get(label, {}).get(which) if isinstance(data.get(label), dict) else None
        if not _valid(entry):
            value, err = _QUADRATURES[which](n)
            entry = {"constant": value, "accuracy": max(err / value, 1e-16),
                     "provenance": "scipy.integrate.quad over the axis at reference point e_n"}
            if not isinstance(data.get(label), dict):
                data[label] = {}
            data[label][which] = entry
            _write(path, data)
        _MEMO[memo_key] = float(entry["constant"])
        return _MEMO[memo_key]


def _write(path: Path, data: dict) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(data, indent=2, sort_keys=True))
        os.replace(tmp, path)
    except OSError:
        pass


def clear_memo() -> None:
    """Forget in-process values so the next call consults the cache file."""
    _MEMO.clear()
