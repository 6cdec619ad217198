"""Differential-privacy primitives: Laplace noise and the exponential mechanism.

All randomness comes from ``numpy.random.Generator`` objects handed out by
:func:`random_source`, so every protocol role can own an independent,
reproducible stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float

    def __post_init__(self):
        check_epsilon(self.epsilon)


def check_epsilon(epsilon, allow_inf=False):
    if not epsilon > 0 or math.isnan(epsilon) or (math.isinf(epsilon) and not allow_inf):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon!r}")


def _key(part):
    if isinstance(part, str):
        return int.from_bytes(part.encode(), "little") & 0xFFFFFFFF
    return int(part)


def random_source(seed: int, *stream) -> np.random.Generator:
    """Return the generator for ``(seed, stream...)``.

    Stream components may be ints or short role names; identical arguments
    always give an identical draw sequence.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(_key(p) for p in stream))
    return np.random.Generator(np.random.PCG64(ss))


def laplace_sample(epsilon: float, rng: np.random.Generator, size=None):
    """Draw from Laplace(0, 1/epsilon) by inverting the CDF of a uniform draw.

    ``epsilon=inf`` is accepted as the zero-noise limit.
    """
    check_epsilon(epsilon, allow_inf=True)
    u = rng.random(size) - 0.5
    if math.isinf(epsilon):
        return np.zeros_like(u) if size is not None else 0.0
    # 1 - 2|u| lies in (0, 1]; u == -0.5 would give log(0), map it to the tiny end
    tail = np.maximum(1.0 - 2.0 * np.abs(u), np.finfo(float).tiny)
    out = -np.sign(u) * np.log(tail) / epsilon
    return float(out) if size is None else out


def noise_counts(counts, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    return counts + laplace_sample(epsilon, rng, size=counts.shape)


def exponential_probabilities(scores, epsilon: float) -> np.ndarray:
    """Normalized ``exp(epsilon * score)`` weights, max-shifted for stability."""
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        raise ValueError("exponential mechanism needs at least one candidate")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if epsilon < 0 or math.isnan(epsilon):
        raise ValueError(f"epsilon must be non-negative, got {epsilon!r}")
    if math.isinf(epsilon):
        w = (scores == scores.max()).astype(float)
    else:
        w = np.exp(epsilon * (scores - scores.max()))
    return w / w.sum()


def sample_cumulative(cdf: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from a cumulative weight array whose last entry is the total."""
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(i, len(cdf) - 1)


def exponential_sample(scores, epsilon: float, rng: np.random.Generator) -> int:
    """Exponential mechanism with a uniform base measure over candidates."""
    return sample_cumulative(np.cumsum(exponential_probabilities(scores, epsilon)), rng)
