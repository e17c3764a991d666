import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppns.errors import ConfigurationError, ValidationError
from ppns.ratings import RatingMatrix
from ppns.similarity import (
    SimilarityRow,
    cosine_similarity,
    read_similarity_cache,
    recommendation_sensitivity,
    selection_weights,
    similarity_row,
    write_similarity_cache,
)

from conftest import random_matrix


def brute_force_rs(ratings: dict, pairs):
    """Both sensitivity terms from plain dicts, leave-one-item-out norms."""
    best = -math.inf
    for i, j in pairs:
        ri, rj = ratings[i], ratings[j]
        common = sorted(set(ri) & set(rj))
        if len(common) < 2:
            continue
        ni = math.sqrt(sum(v * v for v in ri.values()))
        nj = math.sqrt(sum(v * v for v in rj.values()))
        for s in common:
            pi = math.sqrt(sum(v * v for t, v in ri.items() if t != s))
            pj = math.sqrt(sum(v * v for t, v in rj.items() if t != s))
            t1 = ri[s] * rj[s] / (pi * pj)
            t2 = ri[s] * rj[s] * (ni * nj - pi * pj) / (ni * nj * pi * pj)
            best = max(best, t1, t2)
    return best


def as_dicts(m):
    out = {u: {} for u in range(m.n_users)}
    for r, c, v in zip(m.rows.tolist(), m.cols.tolist(), m.values.tolist()):
        out[r][c] = v
    return out


def test_identical_vectors():
    m = RatingMatrix.from_triples([(1, "a", 4), (1, "b", 2), (2, "a", 4), (2, "b", 2)])
    assert cosine_similarity(m, 0, 1) == pytest.approx(1.0, abs=1e-15)


def test_disjoint_items():
    m = RatingMatrix.from_triples([(1, "a", 4), (2, "b", 2)])
    assert cosine_similarity(m, 0, 1) == 0.0


def test_hand_example():
    m = RatingMatrix.from_triples([("i", "s1", 4), ("i", "s2", 3), ("j", "s1", 4)])
    assert cosine_similarity(m, 0, 1) == pytest.approx(0.8, abs=1e-15)


def test_user_without_ratings_has_zero_similarity():
    m = RatingMatrix.from_triples([(1, "a", 4), (2, "a", 2)])
    m = m.with_rows([3], [{}])
    assert cosine_similarity(m, 0, 2) == 0.0
    row = similarity_row(m, 2)
    assert row.sims.tolist() == [0.0, 0.0]


def test_two_user_row_is_singleton():
    m = RatingMatrix.from_triples([(1, "a", 4), (2, "a", 2)])
    row = similarity_row(m, 0)
    assert row.candidates == [(1, pytest.approx(1.0))]


def test_equal_users_sorted_by_id():
    m = RatingMatrix.from_triples([(u, "a", 3) for u in range(6)])
    row = similarity_row(m, 3)
    assert row.ids.tolist() == [0, 1, 2, 4, 5]
    assert np.allclose(row.sims, 1.0)


def test_movielens_row_top1_matches_brute_force(ml):
    row = similarity_row(ml, 0)
    assert row.n == 942 and 0 not in row.ids
    assert np.all(np.diff(row.sims) <= 0)
    brute = [(cosine_similarity(ml, 0, j), -j) for j in range(1, ml.n_users)]
    best_sim, neg_j = max(brute)
    assert row.ids[0] == -neg_j
    assert row.sims[0] == pytest.approx(best_sim, abs=1e-12)


def test_masked_row_equals_row_of_matrix_without_the_cell():
    m = random_matrix(3)
    target = 4
    cols, _ = m.row(target)
    x = int(cols[0])
    masked = similarity_row(m, target, mask_item=x)
    without = RatingMatrix._canonical(
        *(arr[~((m.rows == target) & (m.cols == x))] for arr in (m.rows, m.cols, m.values)),
        m.row_ids, m.col_ids, m.axis,
    )
    ref = similarity_row(without, target)
    assert masked.ids.tolist() == ref.ids.tolist()
    assert np.allclose(masked.sims, ref.sims, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_rows_agree_with_pairwise_cosine(seed):
    m = random_matrix(seed)
    t = seed % m.n_users
    row = similarity_row(m, t)
    for cid, s in row.candidates:
        assert s == pytest.approx(cosine_similarity(m, t, cid), abs=1e-12)
    assert np.all(np.diff(row.sims) <= 0)
    # ties by ascending id
    for a, b in zip(row.candidates, row.candidates[1:]):
        if a[1] == b[1]:
            assert a[0] < b[0]


def test_symmetry_and_range_on_movielens(ml):
    rng = np.random.default_rng(0)
    pairs = rng.integers(0, ml.n_users, size=(1000, 2))
    for i, j in pairs.tolist():
        a, b = cosine_similarity(ml, i, j), cosine_similarity(ml, j, i)
        assert abs(a - b) <= 1e-12
        assert 0.0 <= a <= 1.0


# sensitivity --------------------------------------------------------------


def test_sensitivity_hand_example():
    m = RatingMatrix.from_triples([("i", 1, 4), ("i", 2, 3), ("j", 1, 5), ("j", 2, 1)])
    rs = recommendation_sensitivity(m, "pairwise", pair=(0, 1))
    assert rs.rs == pytest.approx(20 / 3, rel=1e-12)
    assert recommendation_sensitivity(m, "global").rs == pytest.approx(20 / 3, rel=1e-12)
    assert recommendation_sensitivity(m, "target-local", target=0).rs == pytest.approx(20 / 3, rel=1e-12)


def test_identical_vectors_sensitivity_is_largest_first_term():
    vec = {"a": 5, "b": 1, "c": 3}
    m = RatingMatrix.from_triples([(u, i, r) for u in range(3) for i, r in vec.items()])
    # first term for item s: r_s^2 / (|r|^2 - r_s^2); largest at the 5
    expected = max(r * r / (35 - r * r) for r in vec.values())
    assert expected == 2.5
    assert recommendation_sensitivity(m, "global").rs == pytest.approx(expected, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_sensitivity_matches_brute_force(seed):
    m = random_matrix(seed, n_users=10, n_items=8, density=0.5)
    d = as_dicts(m)
    t = seed % m.n_users
    expected = brute_force_rs(d, [(t, j) for j in range(m.n_users) if j != t])
    if expected == -math.inf:
        with pytest.raises(ConfigurationError):
            recommendation_sensitivity(m, "target-local", target=t)
    else:
        got = recommendation_sensitivity(m, "target-local", target=t).rs
        assert got == pytest.approx(expected, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_sensitivity_dominance(seed):
    m = random_matrix(seed, n_users=12, n_items=10, density=0.5)
    g = recommendation_sensitivity(m, "global").rs
    for t in range(m.n_users):
        try:
            local = recommendation_sensitivity(m, "target-local", target=t).rs
        except ConfigurationError:
            continue
        assert g >= local
        for j in range(m.n_users):
            if j == t:
                continue
            try:
                p = recommendation_sensitivity(m, "pairwise", pair=(t, j)).rs
            except ConfigurationError:
                continue
            assert local >= p


def test_no_valid_pair_is_a_configuration_error():
    m = RatingMatrix.from_triples([(1, "a", 4), (2, "a", 2)])
    with pytest.raises(ConfigurationError, match="rs"):
        recommendation_sensitivity(m, "global")


# weights ------------------------------------------------------------------


def _row(sims):
    return SimilarityRow.from_pairs(0, list(enumerate(sims, start=1)))


def test_weight_examples():
    row = _row([1.0, 0.0])
    w = selection_weights(row, epsilon=4 * 3 * 0.5, k=3, rs=0.5).weights
    assert w[0] == pytest.approx(math.e, rel=1e-15)
    assert w[1] == 1.0


def test_doubling_epsilon_squares_weights():
    row = _row([0.9, 0.5, 0.1])
    w1 = selection_weights(row, 1.0, 2, 0.3).weights
    w2 = selection_weights(row, 2.0, 2, 0.3).weights
    assert np.allclose(w2, w1 ** 2, rtol=1e-12)


@pytest.mark.parametrize("eps, k, rs", [(0, 1, 1), (1, 0, 1), (1, 1, 0), (-1, 1, 1)])
def test_weight_validation(eps, k, rs):
    with pytest.raises(ValidationError):
        selection_weights(_row([0.5]), eps, k, rs)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0, 1), min_size=1, max_size=30),
    st.floats(0.01, 10), st.integers(1, 50), st.floats(0.01, 5),
)
def test_weight_formula_and_monotonicity(sims, eps, k, rs):
    row = _row(sims)
    w = selection_weights(row, eps, k, rs).weights
    expected = np.exp(eps * row.sims / (4 * k * rs))
    assert np.allclose(w, expected, rtol=1e-12, atol=0)
    assert (w > 0).all()
    # sorting by weight gives the same permutation as sorting by similarity
    by_weight = sorted(range(len(w)), key=lambda i: (-w[i], row.ids[i]))
    by_sim = sorted(range(len(w)), key=lambda i: (-row.sims[i], row.ids[i]))
    assert [w[i] for i in by_weight] == [w[i] for i in by_sim]
    gaps = np.diff(row.sims) * (eps / (4 * k * rs))
    assert (np.diff(w)[gaps < -1e-9] < 0).all()


def test_cache_round_trip(tmp_path):
    m = random_matrix(1)
    rows = [similarity_row(m, t) for t in (0, 5)]
    p = tmp_path / "cache.csv"
    write_similarity_cache(m, rows, p)
    back = read_similarity_cache(m, p)
    for r in rows:
        b = back[r.target]
        assert b.ids.tolist() == r.ids.tolist()
        assert np.allclose(b.sims, r.sims, rtol=1e-11)
    assert p.read_text().splitlines()[0] == "target,candidate,sim"
