"""Cosine similarity, sorted candidate rows, sensitivity and selection weights."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ConfigurationError, ValidationError
from .ratings import RatingMatrix

SCOPES = ("pairwise", "target-local", "global")


@dataclass(frozen=True, eq=False)
class SimilarityRow:
    """A target's candidates sorted by descending similarity.

    Ties are broken by ascending row index.  ``ids[r]`` is the candidate at
    rank ``r`` (0-based) and ``sims[r]`` its similarity to ``target``.
    """

    target: int
    ids: np.ndarray
    sims: np.ndarray

    def __len__(self):
        return len(self.ids)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def candidates(self) -> list[tuple[int, float]]:
        return list(zip(self.ids.tolist(), self.sims.tolist()))

    @classmethod
    def from_pairs(cls, target: int, pairs: Iterable[tuple[int, float]]) -> "SimilarityRow":
        """Build a row from unsorted ``(candidate, sim)`` pairs (fixtures, caches)."""
        pairs = sorted(pairs, key=lambda p: (-p[1], p[0]))
        ids = np.array([p[0] for p in pairs], dtype=np.int64)
        sims = np.array([p[1] for p in pairs], dtype=np.float64)
        return cls(target, ids, sims)


@dataclass(frozen=True)
class SensitivityValue:
    rs: float
    scope: str


@dataclass(frozen=True, eq=False)
class SelectionWeights:
    """Exponential-mechanism weights aligned with a row's rank order."""

    weights: np.ndarray
    epsilon: float
    k: int
    rs: float


def cosine_similarity(matrix: RatingMatrix, i: int, j: int) -> float:
    """Cosine of the two rating vectors; unrated items count as zero.

    Users without ratings have similarity 0 to everyone.
    """
    ci, vi = matrix.row(i)
    cj, vj = matrix.row(j)
    _, pi, pj = np.intersect1d(ci, cj, assume_unique=True, return_indices=True)
    denom = math.sqrt(matrix.sq_norms[i]) * math.sqrt(matrix.sq_norms[j])
    if denom == 0.0 or len(pi) == 0:
        return 0.0
    num = 0.0
    for a, b in zip(vi[pi], vj[pj]):
        num += a * b
    return min(num / denom, 1.0)


def dot_products(matrix: RatingMatrix, target: int) -> np.ndarray:
    """Inner product of every row with row ``target``."""
    x = np.zeros(matrix.n_items)
    cols, vals = matrix.row(target)
    x[cols] = vals
    return matrix.csr @ x


def raw_similarities(
    matrix: RatingMatrix,
    target: int,
    mask_item: int | None = None,
    dots: np.ndarray | None = None,
) -> np.ndarray:
    """Similarity of ``target`` to every row (including itself).

    With ``mask_item`` the target's rating on that column is treated as
    missing: it drops out of the target's norm and out of every dot product.
    Other rows' norms are unchanged.  ``dots`` may carry a precomputed
    :func:`dot_products` result for the unmasked target.
    """
    if dots is None:
        dots = dot_products(matrix, target)
    sq_target = matrix.sq_norms[target]
    if mask_item is not None:
        r = matrix.get(target, mask_item)
        if r:
            raters, vals = matrix.column(mask_item)
            dots = dots.copy()
            dots[raters] -= r * vals
            sq_target = sq_target - r * r
    denom = np.sqrt(matrix.sq_norms) * math.sqrt(max(sq_target, 0.0))
    sims = np.zeros(matrix.n_users)
    np.divide(dots, denom, out=sims, where=denom > 0.0)
    np.clip(sims, 0.0, 1.0, out=sims)
    return sims


def sort_candidates(target: int, sims: np.ndarray) -> SimilarityRow:
    ids = np.concatenate([np.arange(target), np.arange(target + 1, len(sims))])
    s = sims[ids]
    order = np.argsort(-s, kind="stable")
    return SimilarityRow(target, ids[order], s[order])


def similarity_row(matrix: RatingMatrix, target: int, mask_item: int | None = None) -> SimilarityRow:
    """Every other row scored against ``target`` and sorted (ties: ascending id)."""
    if not 0 <= target < matrix.n_users:
        raise ValidationError(f"target {target} out of range 0..{matrix.n_users - 1}")
    return sort_candidates(target, raw_similarities(matrix, target, mask_item))


# sensitivity ------------------------------------------------------------


def _sensitivity_terms(matrix: RatingMatrix, a: int, others: np.ndarray | None = None):
    """Largest leave-one-item-out term over pairs ``(a, j)``.

    Pairs sharing fewer than two items are skipped.  ``others`` restricts j.
    Returns ``-inf`` when nothing qualifies.
    """
    cols_a, vals_a = matrix.row(a)
    if len(cols_a) < 2:
        return -math.inf
    sub = matrix.csc[:, cols_a].tocoo()
    j = sub.row
    r_js = sub.data
    r_as = vals_a[sub.col]
    counts = np.bincount(j, minlength=matrix.n_users)
    keep = (j != a) & (counts[j] >= 2)
    if others is not None:
        allowed = np.zeros(matrix.n_users, dtype=bool)
        allowed[others] = True
        keep &= allowed[j]
    if not keep.any():
        return -math.inf
    j, r_js, r_as = j[keep], r_js[keep], r_as[keep]
    sq_a = matrix.sq_norms[a]
    sq_j = matrix.sq_norms[j]
    norm_a, norm_j = math.sqrt(sq_a), np.sqrt(sq_j)
    primed_a = np.sqrt(sq_a - r_as * r_as)
    primed_j = np.sqrt(sq_j - r_js * r_js)
    prod = r_as * r_js
    primed = primed_a * primed_j
    full = norm_a * norm_j
    term1 = prod / primed
    term2 = prod * (full - primed) / (full * primed)
    return float(max(term1.max(), term2.max()))


def recommendation_sensitivity(
    matrix: RatingMatrix,
    scope: str = "target-local",
    target: int | None = None,
    pair: tuple[int, int] | None = None,
) -> SensitivityValue:
    """Recommendation-aware sensitivity of the similarity score.

    For a pair of rows and each co-rated item ``s`` two terms are formed
    using norms with ``s`` left out (primed) and with it kept::

        r_is r_js / (|r_i'| |r_j'|)
        r_is r_js (|r_i||r_j| - |r_i'||r_j'|) / (|r_i||r_j||r_i'||r_j'|)

    and the largest term is taken over the pairs in ``scope``:
    ``pairwise`` (the given ``pair``), ``target-local`` (every pair
    involving ``target``) or ``global`` (every pair; O(n * nnz)).
    """
    if scope not in SCOPES:
        raise ValidationError(f"scope must be one of {SCOPES}, got {scope!r}")
    if scope == "pairwise":
        if pair is None:
            raise ValidationError("pairwise sensitivity needs pair=(i, j)")
        i, j = pair
        rs = _sensitivity_terms(matrix, i, np.array([j]))
    elif scope == "target-local":
        if target is None:
            raise ValidationError("target-local sensitivity needs target")
        rs = _sensitivity_terms(matrix, target)
    else:
        rs = max((_sensitivity_terms(matrix, a) for a in range(matrix.n_users)), default=-math.inf)
    if not rs > 0.0:
        raise ConfigurationError(
            f"no pair in scope {scope!r} shares two or more rated items, so the "
            "sensitivity is undefined; pass an explicit rs value instead"
        )
    return SensitivityValue(rs, scope)


def selection_weights(row: SimilarityRow, epsilon: float, k: int, rs: float) -> SelectionWeights:
    """``exp(epsilon * sim / (4 * k * rs))`` for every candidate in ``row``."""
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    if not k >= 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    rs = float(getattr(rs, "rs", rs))
    if not rs > 0:
        raise ValidationError(f"rs must be positive, got {rs}")
    w = np.exp(row.sims * (epsilon / (4.0 * k * rs)))
    return SelectionWeights(w, float(epsilon), int(k), rs)


# cache file ---------------------------------------------------------------


def write_similarity_cache(matrix: RatingMatrix, rows: Iterable[SimilarityRow], path) -> None:
    """CSV ``target,candidate,sim`` using external ids, 12 significant digits."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target", "candidate", "sim"])
        for row in rows:
            t = matrix.row_ids[row.target]
            for cid, s in zip(row.ids.tolist(), row.sims.tolist()):
                w.writerow([t, matrix.row_ids[cid], f"{s:.12g}"])


def read_similarity_cache(matrix: RatingMatrix, path) -> dict[int, SimilarityRow]:
    pairs: dict[int, list] = {}
    id_type = type(matrix.row_ids[0]) if matrix.row_ids else str
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            t = matrix.user_index(id_type(rec["target"]))
            c = matrix.user_index(id_type(rec["candidate"]))
            pairs.setdefault(t, []).append((c, float(rec["sim"])))
    return {t: SimilarityRow.from_pairs(t, p) for t, p in pairs.items()}
