"""Weighted sampling without replacement and its approximate mean.

Sequential draws where each remaining individual is picked with probability
proportional to its weight follow Wallenius' non-central hypergeometric
distribution.  Its mean is approximated by the ``mu`` solving::

    (1 - mu_1/m_1) ** (1/w_1) = ... = (1 - mu_c/m_c) ** (1/w_c),  sum(mu) = k

Writing the common value as ``t = exp(-s)`` gives ``mu_i = m_i (1 - t**w_i)``
and a single monotone equation in ``s``, solved by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .errors import ValidationError

MIN_WEIGHT = 1e-12
MAX_EXACT_ITEMS = 12


@dataclass(frozen=True, eq=False)
class Population:
    sizes: np.ndarray
    weights: np.ndarray
    k: float

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if sizes.shape != weights.shape or sizes.ndim != 1:
            raise ValidationError("sizes and weights must be 1-d arrays of equal length")
        if (sizes <= 0).any():
            raise ValidationError("every category needs a positive size")
        if not (weights > 0).all():
            raise ValidationError("every weight must be positive")
        if not 0 <= self.k <= sizes.sum():
            raise ValidationError(f"cannot draw k={self.k} from {sizes.sum():g} individuals")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True, eq=False)
class MeanVector:
    mu: np.ndarray
    t: float

    def __iter__(self):
        return iter(self.mu)

    def __len__(self):
        return len(self.mu)


def wallenius_mean(pop: Population) -> MeanVector:
    """Approximate mean number of draws per category.

    Exact when all weights are equal.  Weights are clamped below at 1e-12.
    """
    sizes, k = pop.sizes, float(pop.k)
    weights = np.maximum(pop.weights, MIN_WEIGHT)
    total = sizes.sum()
    if k == 0:
        return MeanVector(np.zeros_like(sizes), 1.0)
    if k == total:
        return MeanVector(sizes.copy(), 0.0)
    s = _backend.wallenius_log_root(sizes, weights, k)
    mu = sizes * -np.expm1(-s * weights)
    return MeanVector(mu, math.exp(-s))


def _as_rng(rng_seed) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def draw_indices(weights, k: int, rng) -> np.ndarray:
    """Indices of ``k`` sequential weighted draws without replacement."""
    weights = np.asarray(weights, dtype=np.float64)
    if k > len(weights):
        raise ValidationError(f"cannot draw {k} of {len(weights)} items")
    if k == 0:
        return np.empty(0, dtype=np.int64)
    u = _as_rng(rng).random((1, k))
    return _backend.sequential_draw(weights, u)[0]


def draw_indices_batch(weights, k: int, trials: int, rng) -> np.ndarray:
    """``trials`` independent samples, shape ``(trials, k)``."""
    weights = np.asarray(weights, dtype=np.float64)
    if k > len(weights):
        raise ValidationError(f"cannot draw {k} of {len(weights)} items")
    u = _as_rng(rng).random((trials, k))
    return _backend.sequential_draw(weights, u)


def weighted_sample_without_replacement(items: Sequence[tuple], k: int, rng_seed=None) -> list:
    """Draw ``k`` distinct ids from ``(id, weight)`` pairs, in draw order."""
    if k > len(items):
        raise ValidationError(f"cannot draw {k} of {len(items)} items")
    weights = np.array([w for _, w in items], dtype=np.float64)
    if not (weights > 0).all():
        raise ValidationError("weights must be positive")
    idx = draw_indices(weights, k, rng_seed)
    return [items[i][0] for i in idx]


def _subset_probabilities(weights, k):
    """Probability that the first ``k`` draws form each subset (bitmask)."""
    n = len(weights)
    if n > MAX_EXACT_ITEMS:
        raise ValidationError(f"exact enumeration limited to {MAX_EXACT_ITEMS} items, got {n}")
    if not 0 <= k <= n:
        raise ValidationError(f"cannot draw {k} of {n} items")
    total = float(sum(weights))
    layer = {0: 1.0}
    for _ in range(k):
        nxt: dict[int, float] = {}
        for mask, p in layer.items():
            drawn = sum(weights[i] for i in range(n) if mask >> i & 1)
            remaining = total - drawn
            for i in range(n):
                if not mask >> i & 1:
                    key = mask | 1 << i
                    nxt[key] = nxt.get(key, 0.0) + p * weights[i] / remaining
        layer = nxt
    return layer


def exact_subset_probabilities(items: Sequence[tuple], k: int) -> dict[frozenset, float]:
    """Probability of every k-subset of ids, summed over all draw orders."""
    ids = [i for i, _ in items]
    weights = [float(w) for _, w in items]
    return {
        frozenset(ids[i] for i in range(len(ids)) if mask >> i & 1): p
        for mask, p in _subset_probabilities(weights, k).items()
    }


def exact_inclusion_probabilities(items: Sequence[tuple], k: int) -> dict:
    """Probability that each id is among ``k`` sequential weighted draws.

    Brute force over draw paths (memoised by the set drawn so far); meant as
    a test oracle for at most 12 items.
    """
    ids = [i for i, _ in items]
    weights = [float(w) for _, w in items]
    incl = dict.fromkeys(ids, 0.0)
    for mask, p in _subset_probabilities(weights, k).items():
        for i in range(len(ids)):
            if mask >> i & 1:
                incl[ids[i]] += p
    return incl
