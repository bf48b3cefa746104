"""Monte Carlo plumbing: configuration, estimates and reproducible streams.

Every random draw comes from a generator that is a pure function of
``(seed, stream key, chunk index)``.  Work is cut into fixed-size chunks,
each chunk is reduced to a few moments, and chunks are merged in index
order.  The result does not depend on how many threads ran the chunks.
"""
from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Callable, Sequence

import numpy as np

GROWTH_FACTOR = 1.5


@dataclass(frozen=True)
class McConfig:
    """Budget and seeding for a Monte Carlo estimate.

    ``threads`` only changes scheduling; results are identical for any value.
    """

    samples: int = 100_000
    seed: int = 0
    chunk: int = 8192
    max_rejections: int = 1_000_000
    threads: int = 1

    def __post_init__(self):
        for name in ("samples", "chunk", "max_rejections", "threads"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"McConfig.{name} must be a positive integer, got {value!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("McConfig.seed must be a 64-bit unsigned integer")

    def with_samples(self, samples: int) -> "McConfig":
        return replace(self, samples=int(samples))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    samples_used: int
    diverged: bool = False
    warning: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def __float__(self) -> float:
        return float(self.value)


def _key_ints(key) -> tuple[int, ...]:
    if isinstance(key, (tuple, list)):
        out: list[int] = []
        for k in key:
            out.extend(_key_ints(k))
        return tuple(out)
    if isinstance(key, str):
        return (zlib.crc32(key.encode("utf-8")),)
    if isinstance(key, float):
        return (zlib.crc32(repr(key).encode("ascii")),)
    return (int(key) & 0xFFFFFFFF,)


def stream_rng(seed: int, key, index: int) -> np.random.Generator:
    """Counter-based generator for chunk ``index`` of stream ``key``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(*_key_ints(key), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def chunk_lengths(samples: int, chunk: int) -> list[int]:
    full, rest = divmod(int(samples), int(chunk))
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(fn: Callable[[np.random.Generator, int, int], object], mc: McConfig, key,
               samples: int | None = None) -> list:
    """Run ``fn(rng, m, index)`` on every chunk and return results in chunk order."""
    lengths = chunk_lengths(mc.samples if samples is None else samples, mc.chunk)

    def run(index):
        return fn(stream_rng(mc.seed, key, index), lengths[index], index)

    if mc.threads > 1 and len(lengths) > 1:
        with ThreadPoolExecutor(max_workers=mc.threads) as pool:
            return list(pool.map(run, range(len(lengths))))
    return [run(i) for i in range(len(lengths))]


@dataclass(frozen=True)
class Moments:
    """Count, mean, centred second moment and raw second moment of a batch."""

    n: int
    mean: float
    m2: float
    sumsq: float
    nonfinite: int = 0

    @staticmethod
    def of(weights) -> "Moments":
        w = np.asarray(weights, dtype=float).ravel()
        bad = int(np.count_nonzero(~np.isfinite(w)))
        if bad:
            w = w[np.isfinite(w)]
        if w.size == 0:
            return Moments(0, 0.0, 0.0, 0.0, bad)
        mean = float(np.mean(w))
        return Moments(int(w.size), mean, float(np.sum((w - mean) ** 2)),
                       float(np.sum(w * w)), bad)

    def merge(self, other: "Moments") -> "Moments":
        n = self.n + other.n
        if n == 0:
            return Moments(0, 0.0, 0.0, 0.0, self.nonfinite + other.nonfinite)
        d = other.mean - self.mean
        mean = self.mean + d * other.n / n
        m2 = self.m2 + other.m2 + d * d * self.n * other.n / n
        return Moments(n, mean, m2, self.sumsq + other.sumsq,
                       self.nonfinite + other.nonfinite)


def reduce_moments(parts: Sequence[Moments]) -> Moments:
    total = Moments(0, 0.0, 0.0, 0.0)
    for part in parts:
        total = total.merge(part)
    return total


def to_estimate(m: Moments, ess_floor: float = 0.01) -> McEstimate:
    n = m.n + m.nonfinite
    if m.nonfinite:
        return McEstimate(math.inf, math.inf, n, diverged=True,
                          warning=f"{m.nonfinite} non-finite weights")
    if m.n == 0:
        return McEstimate(0.0, 0.0, 0)
    var = m.m2 / (m.n - 1) if m.n > 1 else 0.0
    stderr = math.sqrt(max(var, 0.0) / m.n)
    warning = None
    if m.sumsq > 0:
        ess = (m.mean * m.n) ** 2 / m.sumsq
        if ess < ess_floor * m.n:
            warning = f"effective sample size {ess:.1f} below {ess_floor:.0%} of {m.n}"
    return McEstimate(m.mean, stderr, m.n, warning=warning)


def integrate(sample_fn: Callable[[np.random.Generator, int], np.ndarray], mc: McConfig,
              key=0) -> McEstimate:
    """Mean of the weights returned by ``sample_fn(rng, m)`` over ``mc.samples`` draws."""
    parts = map_chunks(lambda rng, m, i: Moments.of(sample_fn(rng, m)), mc, key)
    return to_estimate(reduce_moments(parts))


def integrate_with_growth(sample_fn, mc: McConfig, key=0) -> tuple[McEstimate, McEstimate]:
    """Estimates at ``N`` and ``4N`` samples; the first is a chunk prefix of the second.

    The larger estimate carries ``diverged=True`` when it exceeds the smaller
    by more than :data:`GROWTH_FACTOR`.
    """
    parts = map_chunks(lambda rng, m, i: Moments.of(sample_fn(rng, m)), mc, key,
                       samples=4 * mc.samples)
    k = len(chunk_lengths(mc.samples, mc.chunk))
    small = to_estimate(reduce_moments(parts[:k]))
    large = to_estimate(reduce_moments(parts))
    return small, flag_growth(small, large)


def flag_growth(small: McEstimate, large: McEstimate) -> McEstimate:
    grew = (not math.isfinite(large.value)
            or (small.value > 0 and large.value > GROWTH_FACTOR * small.value))
    if grew and not large.diverged:
        return replace(large, diverged=True)
    return large
