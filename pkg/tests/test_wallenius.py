import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ppns.errors import ValidationError
from ppns.wallenius import (
    Population,
    draw_indices_batch,
    exact_inclusion_probabilities,
    exact_subset_probabilities,
    wallenius_mean,
    weighted_sample_without_replacement,
)


def permutation_inclusion(weights, k):
    """Sum path probabilities over every ordered draw sequence."""
    incl = [0.0] * len(weights)
    for seq in itertools.permutations(range(len(weights)), k):
        p, rem = 1.0, sum(weights)
        for i in seq:
            p *= weights[i] / rem
            rem -= weights[i]
        for i in seq:
            incl[i] += p
    return incl


# mean approximation ---------------------------------------------------------


def test_equal_weights_exact():
    mv = wallenius_mean(Population([5, 5], [1, 1], 4))
    assert np.allclose(mv.mu, [2, 2], atol=1e-12)


def test_zero_draws():
    mv = wallenius_mean(Population([3, 4], [1, 5], 0))
    assert mv.mu.tolist() == [0, 0] and mv.t == 1.0


def test_draw_everything():
    mv = wallenius_mean(Population([3, 4], [1, 5], 7))
    assert mv.mu.tolist() == [3, 4]


def test_quadratic_case():
    # t**2 + t = 1  ->  t = (sqrt 5 - 1)/2
    t = (math.sqrt(5) - 1) / 2
    mv = wallenius_mean(Population([1, 1], [2, 1], 1))
    assert mv.t == pytest.approx(t, abs=1e-12)
    assert np.allclose(mv.mu, [1 - t * t, 1 - t], atol=1e-12)
    assert np.allclose(mv.mu, [0.618034, 0.381966], atol=1e-6)


def test_too_many_draws():
    with pytest.raises(ValidationError):
        Population([1, 1], [1, 1], 3)
    with pytest.raises(ValidationError):
        Population([1, 0], [1, 1], 1)
    with pytest.raises(ValidationError):
        Population([1, 1], [1, 0], 1)


def test_tiny_weights_are_clamped():
    mv = wallenius_mean(Population([2, 2], [1e-300, 1.0], 1))
    assert abs(mv.mu.sum() - 1) < 1e-10


populations = st.integers(1, 12).flatmap(
    lambda c: st.tuples(
        st.lists(st.integers(1, 20), min_size=c, max_size=c),
        st.lists(st.floats(1e-3, 1e3), min_size=c, max_size=c),
        st.floats(0, 1),
    )
)


@settings(max_examples=300, deadline=None)
@given(populations)
def test_mean_vector_invariants(pop):
    sizes, weights, frac = pop
    k = frac * sum(sizes)
    mv = wallenius_mean(Population(sizes, weights, k))
    assert abs(mv.mu.sum() - k) <= 1e-10
    assert (mv.mu >= 0).all() and (mv.mu <= np.asarray(sizes) + 1e-12).all()
    share = mv.mu / np.asarray(sizes)
    for i, j in itertools.permutations(range(len(sizes)), 2):
        if weights[i] > weights[j]:
            assert share[i] >= share[j] - 1e-12


def test_fuzz_thousand_populations():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        c = rng.integers(1, 30)
        sizes = rng.integers(1, 50, size=c)
        weights = np.exp(rng.uniform(-5, 5, size=c))
        k = rng.uniform(0, sizes.sum())
        mv = wallenius_mean(Population(sizes, weights, k))
        assert abs(mv.mu.sum() - k) <= 1e-10
        assert (mv.mu >= 0).all() and (mv.mu <= sizes).all()


# exact enumeration ------------------------------------------------------------


def test_exact_equal_weights():
    incl = exact_inclusion_probabilities([(c, 1.0) for c in "abcde"], 2)
    assert all(v == pytest.approx(2 / 5, abs=1e-15) for v in incl.values())


def test_exact_single_draw():
    incl = exact_inclusion_probabilities([("a", 3.0), ("b", 1.0), ("c", 4.0)], 1)
    assert incl == pytest.approx({"a": 3 / 8, "b": 1 / 8, "c": 4 / 8}, abs=1e-15)


def test_exact_differs_from_mean_approximation():
    incl = exact_inclusion_probabilities([("x", 2.0), ("y", 1.0)], 1)
    assert incl == pytest.approx({"x": 2 / 3, "y": 1 / 3}, abs=1e-15)
    approx = wallenius_mean(Population([1, 1], [2, 1], 1)).mu
    assert approx[0] == pytest.approx(0.618034, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.1, 10), min_size=1, max_size=6), st.data())
def test_exact_matches_permutation_enumeration(weights, data):
    k = data.draw(st.integers(0, len(weights)))
    incl = exact_inclusion_probabilities(list(enumerate(weights)), k)
    ref = permutation_inclusion(weights, k)
    assert [incl[i] for i in range(len(weights))] == pytest.approx(ref, abs=1e-12)
    assert sum(incl.values()) == pytest.approx(k, abs=1e-12)


def test_exact_size_limit():
    with pytest.raises(ValidationError):
        exact_inclusion_probabilities([(i, 1.0) for i in range(13)], 2)


# sampler ----------------------------------------------------------------------


def test_sample_everything():
    items = [("a", 1.0), ("b", 5.0), ("c", 0.5)]
    assert sorted(weighted_sample_without_replacement(items, 3, 1)) == ["a", "b", "c"]


def test_sample_validation():
    with pytest.raises(ValidationError):
        weighted_sample_without_replacement([("a", 1.0)], 2, 0)
    with pytest.raises(ValidationError):
        weighted_sample_without_replacement([("a", 0.0), ("b", 1.0)], 1, 0)


def test_sample_is_seed_deterministic():
    items = [(i, 1.0 + i) for i in range(20)]
    a = weighted_sample_without_replacement(items, 7, 123)
    assert a == weighted_sample_without_replacement(items, 7, 123)
    assert len(set(a)) == 7


def test_single_draw_frequencies():
    items = [("a", 2.0), ("b", 1.0), ("c", 1.0)]
    rng = np.random.default_rng(2024)
    n = 100_000
    counts = Counter(weighted_sample_without_replacement(items, 1, rng)[0] for _ in range(n))
    for key, p in [("a", 0.5), ("b", 0.25), ("c", 0.25)]:
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(counts[key] - n * p) <= 3 * sigma


def test_equal_weight_subsets_uniform():
    n = 60_000
    idx = draw_indices_batch(np.ones(4), 2, n, np.random.default_rng(7))
    counts = Counter(tuple(sorted(r)) for r in idx.tolist())
    assert len(counts) == 6
    _, p = stats.chisquare([counts[s] for s in itertools.combinations(range(4), 2)])
    assert p > 0.01


@pytest.mark.parametrize(
    "weights, k",
    [([1, 2, 3], 2), ([0.5, 4, 1, 1, 2], 3), ([1, 9, 2, 7, 3, 5, 4, 6], 4), ([3, 1, 2, 8, 1, 1, 1, 1], 1)],
)
def test_sampler_matches_exact_inclusion(weights, k):
    n = 50_000
    idx = draw_indices_batch(np.asarray(weights, float), k, n, np.random.default_rng(len(weights) * 10 + k))
    freq = np.bincount(idx.ravel(), minlength=len(weights))
    exact = exact_inclusion_probabilities(list(enumerate(weights)), k)
    for i, c in enumerate(freq):
        p = exact[i]
        sigma = math.sqrt(n * p * (1 - p)) or 1.0
        assert abs(c - n * p) <= 4 * sigma


def test_subset_probabilities_sum_to_one():
    sub = exact_subset_probabilities([(i, w) for i, w in enumerate([1, 2, 3, 4])], 2)
    assert len(sub) == 6
    assert sum(sub.values()) == pytest.approx(1.0, abs=1e-15)
