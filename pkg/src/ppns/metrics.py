"""Accuracy metric alpha and the allocation optimality check.

Alpha is the expected sum of the selected neighbours' similarities.  For a
partitioned selection each partition contributes ``sum(sim_j * mu_j)`` where
``mu_j`` is candidate j's expected number of draws (one category per
candidate, so ``mu_j`` is its inclusion probability).
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ValidationError
from .selection import AllocationVector, ppns_allocation
from .similarity import SelectionWeights, SimilarityRow
from .wallenius import Population, exact_inclusion_probabilities, wallenius_mean

ALPHA_METHODS = ("wallenius-mean", "enumeration", "empirical")


@dataclass(frozen=True)
class AccuracyEstimate:
    alpha: float
    per_partition: tuple
    method: str
    stderr: float = 0.0


@dataclass(frozen=True)
class SecurityLevel:
    beta: int

    def __post_init__(self):
        if self.beta < 1:
            raise ValidationError("beta must be >= 1")


def _weights(weights):
    return np.asarray(getattr(weights, "weights", weights), dtype=np.float64)


def pool_alpha(sims, weights, draws: int, method: str = "wallenius-mean") -> float:
    """Expected similarity sum of ``draws`` weighted draws from one pool."""
    sims = np.asarray(sims, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if draws == 0:
        return 0.0
    if draws == len(sims):
        return float(sims.sum())
    if method == "wallenius-mean":
        mu = wallenius_mean(Population(np.ones(len(sims)), weights, draws)).mu
    elif method == "enumeration":
        incl = exact_inclusion_probabilities(list(enumerate(weights)), draws)
        mu = np.array([incl[i] for i in range(len(sims))])
    else:
        raise ValidationError(f"unknown alpha method {method!r}")
    return float(sims @ mu)


def alpha_expected(
    row: SimilarityRow,
    allocation: AllocationVector,
    weights,
    method: str = "wallenius-mean",
) -> AccuracyEstimate:
    """Expected alpha of drawing ``allocation[i]`` from partition ``i``.

    Partitions are consecutive blocks of ``k = sum(allocation)`` candidates.
    """
    counts = list(allocation)
    k = sum(counts)
    w = _weights(weights)
    if k < 1 or any(c < 0 or c > k for c in counts):
        raise ValidationError(f"infeasible allocation {counts}")
    if row.n < len(counts) * k:
        raise ValidationError(f"allocation over {len(counts)} partitions of {k} needs {len(counts) * k} candidates")
    parts = []
    for i, f in enumerate(counts):
        lo, hi = i * k, (i + 1) * k
        parts.append(pool_alpha(row.sims[lo:hi], w[lo:hi], f, method) if f else 0.0)
    return AccuracyEstimate(float(sum(parts)), tuple(parts), method)


def feasible_allocations(k: int, beta: int):
    """Every allocation with sum ``k``, at least one draw from the last
    partition and at most ``k - 1`` from each earlier one."""
    if beta == 1:
        yield AllocationVector((k,))
        return
    for head in itertools.product(range(k), repeat=beta - 1):
        last = k - sum(head)
        if last >= 1:
            yield AllocationVector(tuple(head) + (last,))


@dataclass
class OptimalityReport:
    k: int
    beta: int
    alphas: dict = field(default_factory=dict)
    best: list = field(default_factory=list)
    closed_form: AllocationVector = None
    closed_form_alpha: float = 0.0

    @property
    def optimal(self) -> bool:
        """Closed-form allocation attains the maximum (ties allowed)."""
        return self.closed_form.counts in {b.counts for b in self.best}

    @property
    def ties(self) -> list:
        return [b for b in self.best if b.counts != self.closed_form.counts]

    def rows(self):
        for alloc, a in self.alphas.items():
            yield self.k, self.beta, "-".join(map(str, alloc)), a


def verify_allocation_optimality(
    row: SimilarityRow,
    k: int,
    beta: int,
    weights,
    method: str = "wallenius-mean",
    rtol: float = 1e-12,
) -> OptimalityReport:
    """Enumerate all feasible allocations and check the closed form wins."""
    if k > 6 or beta > 5:
        raise ValidationError("enumeration is limited to k <= 6, beta <= 5")
    report = OptimalityReport(k, beta, closed_form=ppns_allocation(k, beta))
    for alloc in feasible_allocations(k, beta):
        report.alphas[alloc.counts] = alpha_expected(row, alloc, weights, method).alpha
    top = max(report.alphas.values())
    tol = rtol * max(1.0, abs(top))
    report.best = [AllocationVector(a) for a, v in report.alphas.items() if v >= top - tol]
    report.closed_form_alpha = report.alphas[report.closed_form.counts]
    return report


def write_optimality_csv(reports, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "beta", "allocation", "alpha"])
        for rep in reports:
            for k, beta, alloc, a in rep.rows():
                w.writerow([k, beta, alloc, f"{a:.12g}"])


def alpha_empirical(
    selection_fn: Callable,
    row: SimilarityRow,
    trials: int,
    seed=0,
) -> AccuracyEstimate:
    """Monte-Carlo alpha: ``selection_fn(row, rng)`` must return a NeighbourSet.

    The similarity sum uses the row's similarities (not any noisy copy the
    selection may carry).
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    totals = np.empty(trials)
    for t in range(trials):
        nb = selection_fn(row, rng)
        totals[t] = row.sims[nb.ranks].sum()
    se = float(totals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return AccuracyEstimate(float(totals.mean()), (), "empirical", se)
