"""Rating prediction from a neighbour set and leave-one-out MAE evaluation."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .ratings import RatingMatrix
from .selection import NeighbourSet, SelectionPolicy, select_neighbours
from .similarity import dot_products, raw_similarities, recommendation_sensitivity, sort_candidates


@dataclass(frozen=True)
class Prediction:
    target: int
    item: int
    value: float
    neighbours_used: int
    fallback: bool = False


@dataclass
class EvaluationReport:
    mae: float
    n_predictions: int
    per_target: dict = field(default_factory=dict)
    predictions: list | None = None


def fallback_rating(matrix: RatingMatrix, target: int) -> float:
    m = matrix.mean_rating(target)
    return m if not math.isnan(m) else matrix.global_mean


def predict_rating(matrix: RatingMatrix, neighbours: NeighbourSet, item: int, fallback: float | None = None) -> Prediction:
    """Similarity-weighted average of the neighbours' ratings on ``item``.

    Neighbours who did not rate the item are ignored.  With no rater, or a
    zero weight sum, the ``fallback`` value is returned (default: the
    target's mean rating, else the global mean).
    """
    raters, ratings = matrix.column(item)
    pos = np.searchsorted(raters, neighbours.ids)
    pos_c = np.minimum(pos, max(len(raters) - 1, 0))
    hit = (pos < len(raters)) & (raters[pos_c] == neighbours.ids) if len(raters) else np.zeros(len(pos), bool)
    used = int(hit.sum())
    if used:
        s = neighbours.sims[hit]
        den = float(np.abs(s).sum())
        if den > 0.0:
            value = float(s @ ratings[pos_c[hit]]) / den
            return Prediction(neighbours.target, item, value, used)
    if fallback is None:
        fallback = fallback_rating(matrix, neighbours.target)
    return Prediction(neighbours.target, item, float(fallback), used, fallback=True)


def _target_rs(matrix, policy, target, global_rs):
    if policy.method == "knn":
        return None
    if global_rs is not None:
        return global_rs
    scope = "target-local" if policy.rs_scope == "pairwise" else policy.rs_scope
    return recommendation_sensitivity(matrix, scope, target=target).rs


def _evaluate_target(matrix: RatingMatrix, policy: SelectionPolicy, target: int, items, seed, global_rs=None, keep=False):
    """Absolute errors for every rated cell of ``target`` (leave-one-out)."""
    rng = np.random.default_rng([int(seed), int(target)])
    cols, vals = matrix.row(target)
    if items is not None:
        sel = np.isin(cols, items)
        cols, vals = cols[sel], vals[sel]
    if len(cols) == 0:
        return [], []
    rs = _target_rs(matrix, policy, target, global_rs)
    dots = dot_products(matrix, target)
    total, count = matrix.row_sums[target], matrix.row_counts[target]
    errors, preds = [], []
    for x, r in zip(cols.tolist(), vals.tolist()):
        row = sort_candidates(target, raw_similarities(matrix, target, mask_item=x, dots=dots))
        nb = select_neighbours(row, policy, rs, rng)
        fb = (total - r) / (count - 1) if count > 1 else matrix.global_mean
        p = predict_rating(matrix, nb, x, fallback=fb)
        errors.append(abs(r - p.value))
        if keep:
            preds.append((target, x, r, p.value))
    return errors, preds


def _evaluate_chunk(args):
    matrix, policy, targets, items, seed, global_rs, keep = args
    return [_evaluate_target(matrix, policy, t, items, seed, global_rs, keep) for t in targets]


def evaluate_mae(
    matrix: RatingMatrix,
    policy: SelectionPolicy,
    targets: Sequence[int],
    items: Iterable[int] | None = None,
    seed: int | None = None,
    workers: int = 1,
    keep_predictions: bool = False,
) -> EvaluationReport:
    """Leave-one-out MAE over every rated cell of each target.

    Each cell is hidden from the similarity computation of its own
    prediction.  Randomness for target ``t`` comes from the stream
    ``(seed, t)``, so results do not depend on target order or ``workers``.
    """
    seed = policy.seed if seed is None else seed
    targets = [int(t) for t in targets]
    items = None if items is None else np.asarray(sorted(set(int(i) for i in items)), dtype=np.int64)
    global_rs = None
    if policy.method != "knn" and policy.rs_scope == "global":
        global_rs = recommendation_sensitivity(matrix, "global").rs
    if workers > 1 and len(targets) > 1:
        chunks = [targets[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_evaluate_chunk, [(matrix, policy, c, items, seed, global_rs, keep_predictions) for c in chunks]))
        by_target = {}
        for c, res in zip(chunks, parts):
            by_target.update(zip(c, res))
        results = [by_target[t] for t in targets]
    else:
        results = _evaluate_chunk((matrix, policy, targets, items, seed, global_rs, keep_predictions))
    all_errors, per_target, preds = [], {}, []
    for t, (errs, p) in zip(targets, results):
        if errs:
            per_target[t] = (math.fsum(errs) / len(errs), len(errs))
        all_errors.extend(errs)
        preds.extend(p)
    if not all_errors:
        raise ValidationError("no rated cells to score for the given targets/items")
    mae = math.fsum(all_errors) / len(all_errors)
    return EvaluationReport(mae, len(all_errors), per_target, preds if keep_predictions else None)


def sample_targets(matrix: RatingMatrix, count: int, seed) -> list[int]:
    """``count`` distinct rows with at least two ratings, ascending."""
    eligible = np.flatnonzero(matrix.row_counts >= 2)
    if count > len(eligible):
        raise ValidationError(f"asked for {count} targets but only {len(eligible)} rows have two or more ratings")
    rng = np.random.default_rng(seed)
    return sorted(rng.choice(eligible, size=count, replace=False).tolist())
