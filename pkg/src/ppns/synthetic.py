"""Small synthetic rating matrices for attack experiments and tests."""

from __future__ import annotations

import numpy as np

from .ratings import RatingMatrix


def attack_matrix(
    n_users: int = 200,
    n_items: int = 60,
    target_items: int = 14,
    overlap: int = 6,
    per_user: int = 20,
    seed: int = 7,
) -> tuple[RatingMatrix, int]:
    """Matrix with one target whose rating pattern no other user shares.

    The target (row 0) rates ``target_items`` items with 4s and 5s.  Every
    other user rates ``overlap`` of those items plus ``per_user - overlap``
    others, uniformly 1-5, so fakes cloning part of the target see the
    target as the clear nearest real user while other users still have
    positive similarity and ratings on the target's hidden items.
    """
    rng = np.random.default_rng(seed)
    triples = []
    t_items = np.arange(target_items)
    for i, r in zip(t_items, rng.integers(4, 6, size=target_items)):
        triples.append((1, int(i), int(r)))
    rest = np.arange(target_items, n_items)
    for u in range(2, n_users + 1):
        items = np.concatenate([
            rng.choice(t_items, size=overlap, replace=False),
            rng.choice(rest, size=per_user - overlap, replace=False),
        ])
        for i, r in zip(items, rng.integers(1, 6, size=per_user)):
            triples.append((u, int(i), int(r)))
    matrix = RatingMatrix.from_triples(triples)
    return matrix, matrix.user_index(1)
