"""Neighbour selection: kNN, nPNS, PNCF and PPNS.

All strategies work on a :class:`~ppns.similarity.SimilarityRow` and return a
:class:`NeighbourSet` whose members are listed in rank order, so predictions
never depend on the order in which random draws happened.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .similarity import SelectionWeights, SimilarityRow, selection_weights
from .wallenius import _as_rng, draw_indices

log = logging.getLogger(__name__)

METHODS = ("knn", "npns", "pncf", "ppns")
LAMBDA_MODES = ("attack", "formula")


@dataclass(frozen=True)
class SelectionPolicy:
    """How to pick the ``k`` neighbours.

    ``beta`` is the number of size-``k`` partitions the neighbours span
    (``None`` means the whole candidate list, for nPNS only).  ``lambda_mode``
    picks PNCF's truncation width: ``attack`` uses ``sim_k - sim_{beta k}``;
    ``formula`` uses ``min(sim_k, 4 k rs / eps * ln(k (n - k) / rho))``.
    ``laplace_scale=None`` means ``2 rs / epsilon``.
    """

    method: str
    k: int
    epsilon: float = 1.0
    beta: int | None = 1
    lambda_mode: str = "attack"
    rho: float = 0.5
    laplace_scale: float | None = None
    pncf_noise: bool = True
    rs_scope: str = "target-local"
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (isinstance(self.k, (int, np.integer)) and self.k >= 1):
            raise ValidationError(f"k must be a positive integer, got {self.k!r}")
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.beta is None:
            if self.method != "npns":
                raise ValidationError("beta=None (whole list) is only meaningful for npns")
        elif not (isinstance(self.beta, (int, np.integer)) and self.beta >= 1):
            raise ValidationError(f"beta must be a positive integer, got {self.beta!r}")
        if self.lambda_mode not in LAMBDA_MODES:
            raise ValidationError(f"lambda_mode must be one of {LAMBDA_MODES}")
        if not 0 < self.rho < 1:
            raise ValidationError(f"rho must lie in (0, 1), got {self.rho}")
        if self.laplace_scale is not None and self.laplace_scale < 0:
            raise ValidationError("laplace_scale must be non-negative")

    @property
    def randomised(self) -> bool:
        return self.method != "knn"


@dataclass(frozen=True)
class AllocationVector:
    counts: tuple

    def __iter__(self):
        return iter(self.counts)

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, i):
        return self.counts[i]

    @property
    def k(self) -> int:
        return sum(self.counts)

    @property
    def beta(self) -> int:
        return len(self.counts)


@dataclass(frozen=True, eq=False)
class NeighbourSet:
    """Selected neighbours in rank order.

    ``sims`` are the weights used for prediction (noisy for PNCF);
    ``partitions`` holds each member's 0-based partition (``rank // k``).
    """

    target: int
    ids: np.ndarray
    sims: np.ndarray
    ranks: np.ndarray
    partitions: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.ids)

    @property
    def members(self) -> list[tuple[int, float]]:
        return list(zip(self.ids.tolist(), self.sims.tolist()))

    def partition_counts(self, beta: int) -> list[int]:
        return np.bincount(self.partitions, minlength=beta).tolist()


def _neighbours(row: SimilarityRow, ranks, k: int, sims=None) -> NeighbourSet:
    ranks = np.sort(np.asarray(ranks, dtype=np.int64))
    return NeighbourSet(
        target=row.target,
        ids=row.ids[ranks],
        sims=row.sims[ranks] if sims is None else sims,
        ranks=ranks,
        partitions=ranks // k,
    )


def _need(row: SimilarityRow, count: int, what: str):
    if row.n < count:
        raise ValidationError(f"{what} needs {count} candidates but the row has {row.n}")


def select_knn(row: SimilarityRow, k: int) -> NeighbourSet:
    _need(row, k, f"k={k}")
    return _neighbours(row, np.arange(k), k)


def ppns_allocation(k: int, beta: int) -> AllocationVector:
    """Neighbours drawn per partition: ``k-1`` from the first, 1 from the last."""
    if k < 1 or beta < 1:
        raise ValidationError(f"k and beta must be >= 1, got k={k}, beta={beta}")
    if beta == 1:
        return AllocationVector((k,))
    return AllocationVector((k - 1,) + (0,) * (beta - 2) + (1,))


def _partition_draw(weights, start, size, count, rng):
    if count == size:
        return np.arange(start, start + size)
    return start + draw_indices(weights[start:start + size], count, rng)


def select_ppns(row: SimilarityRow, policy: SelectionPolicy, weights: SelectionWeights, rng=None) -> NeighbourSet:
    """Partitioned selection: split the sorted row into blocks of ``k`` and
    draw each block's share of the allocation by weighted sampling."""
    k, beta = policy.k, policy.beta
    _need(row, beta * k, f"beta={beta} with k={k} (harness bound: beta <= n/(2k))")
    rng = _as_rng(policy.seed if rng is None else rng)
    w = weights.weights
    picked = [
        _partition_draw(w, i * k, k, f, rng)
        for i, f in enumerate(ppns_allocation(k, beta))
        if f
    ]
    return _neighbours(row, np.concatenate(picked), k)


def select_npns(row: SimilarityRow, k: int, beta: int | None, weights: SelectionWeights, rng=None) -> NeighbourSet:
    """Weighted sample of ``k`` from the top ``beta * k`` (whole row if ``beta`` is None)."""
    pool = row.n if beta is None else beta * k
    _need(row, max(pool, k), f"beta={beta} with k={k}")
    return _neighbours(row, _partition_draw(weights.weights, 0, pool, k, _as_rng(rng)), k)


def pncf_lambda(row: SimilarityRow, policy: SelectionPolicy, rs: float) -> float:
    k, n = policy.k, row.n
    sim_k = float(row.sims[k - 1])
    if policy.lambda_mode == "attack":
        _need(row, policy.beta * k, f"beta={policy.beta} with k={k}")
        return sim_k - float(row.sims[policy.beta * k - 1])
    if n == k:
        return 0.0
    width = 4.0 * k * rs / policy.epsilon * math.log(k * (n - k) / policy.rho)
    return min(sim_k, width)


def select_pncf(row: SimilarityRow, policy: SelectionPolicy, weights: SelectionWeights, rs: float, rng=None) -> NeighbourSet:
    """Truncated private selection followed by Laplace noise on member sims.

    Candidates above ``sim_k + lambda`` are always kept; the rest are drawn
    from the band ``[sim_k - lambda, sim_k + lambda]`` (in attack mode the
    band is exactly the top ``beta * k`` by rank).
    """
    k = policy.k
    _need(row, k, f"k={k}")
    rng = _as_rng(policy.seed if rng is None else rng)
    rs = float(getattr(rs, "rs", rs))
    lam = pncf_lambda(row, policy, rs)
    sims = row.sims
    if lam <= 0.0:
        ranks = np.arange(k)
    else:
        sim_k = float(sims[k - 1])
        n_top = int(np.count_nonzero(sims > sim_k + lam))
        if policy.lambda_mode == "attack":
            band_end = policy.beta * k
        else:
            band_end = int(np.count_nonzero(sims >= sim_k - lam))
        fill = k - n_top
        band = np.arange(n_top, band_end)
        if len(band) >= fill:
            drawn = band[draw_indices(weights.weights[n_top:band_end], fill, rng)]
        else:
            log.warning(
                "PNCF band holds %d candidates but %d are needed; filling with nearest",
                len(band), fill,
            )
            drawn = np.arange(n_top, n_top + fill)
        ranks = np.concatenate([np.arange(n_top), drawn])
    ranks = np.sort(ranks)
    member_sims = sims[ranks].copy()
    if policy.pncf_noise:
        scale = 2.0 * rs / policy.epsilon if policy.laplace_scale is None else policy.laplace_scale
        if scale > 0:
            member_sims = np.maximum(member_sims + rng.laplace(0.0, scale, size=k), 0.0)
    return _neighbours(row, ranks, k, sims=member_sims)


def select_neighbours(row: SimilarityRow, policy: SelectionPolicy, rs: float | None = None, rng=None) -> NeighbourSet:
    """Dispatch on ``policy.method``; ``rs`` is required by the randomised methods."""
    if policy.method == "knn":
        return select_knn(row, policy.k)
    if rs is None:
        raise ValidationError(f"{policy.method} needs a sensitivity value rs")
    rng = _as_rng(policy.seed if rng is None else rng)
    weights = selection_weights(row, policy.epsilon, policy.k, rs)
    if policy.method == "ppns":
        return select_ppns(row, policy, weights, rng)
    if policy.method == "npns":
        return select_npns(row, policy.k, policy.beta, weights, rng)
    return select_pncf(row, policy, weights, rs, rng)
