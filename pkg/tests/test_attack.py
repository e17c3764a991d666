import numpy as np
import pytest

from ppns.attack import AttackConfig, forge_profiles, run_attack
from ppns.errors import ValidationError
from ppns.selection import SelectionPolicy
from ppns.similarity import cosine_similarity, similarity_row
from ppns.synthetic import attack_matrix


@pytest.fixture(scope="module")
def synth():
    return attack_matrix()


def test_forge_on_movielens(ml):
    cfg = AttackConfig(target=0, m=8, policy=SelectionPolicy("knn", 50))
    f = forge_profiles(ml, cfg)
    assert f.matrix.n_users == 993 and len(f.fakes) == 50
    assert ml.n_users == 943
    assert f.matrix.row_ids[-1] == max(ml.row_ids) + 50
    cols, vals = ml.row(0)
    lookup = dict(zip(cols.tolist(), vals.tolist()))
    for fk in f.fakes:
        fc, fv = f.matrix.row(int(fk))
        assert fc.tolist() == f.known_items.tolist()
        assert fv.tolist() == [lookup[c] for c in fc.tolist()]
    assert len(f.sensitive_items) == ml.row_counts[0] - 8


def test_fake_pair_similarity_is_one(synth):
    m, t = synth
    f = forge_profiles(m, AttackConfig(t, 5, SelectionPolicy("knn", 4)))
    a, b = (int(x) for x in f.fakes[:2])
    assert cosine_similarity(f.matrix, a, b) == pytest.approx(1.0)


def test_forge_validation(synth):
    m, t = synth
    with pytest.raises(ValidationError):
        forge_profiles(m, AttackConfig(t, 99, SelectionPolicy("knn", 4)))
    with pytest.raises(ValidationError):
        forge_profiles(m.transpose(), AttackConfig(0, 1, SelectionPolicy("knn", 4)))


def test_forge_is_seeded(synth):
    m, t = synth
    a = forge_profiles(m, AttackConfig(t, 6, SelectionPolicy("knn", 3), seed=1))
    b = forge_profiles(m, AttackConfig(t, 6, SelectionPolicy("knn", 3), seed=1))
    assert a.known_items.tolist() == b.known_items.tolist()


def test_knn_attack_discloses(synth):
    m, t = synth
    rep = run_attack(m, AttackConfig(t, 8, SelectionPolicy("knn", 50)), trials=5)
    assert rep.disclosed and rep.sole_real_neighbour == 1.0 and rep.target_in_neighbours == 1.0


def test_ppns_beta_one_behaves_like_knn(synth):
    m, t = synth
    rep = run_attack(m, AttackConfig(t, 8, SelectionPolicy("ppns", 50, 1.0, 1)), trials=3)
    assert rep.disclosed


def test_ppns_draws_outside_attack_block(synth):
    m, t = synth
    cfg = AttackConfig(t, 8, SelectionPolicy("ppns", 50, 1.0, 2))
    f = forge_profiles(m, cfg)
    row = similarity_row(f.matrix, int(f.fakes[0]))
    block = set(f.fakes.tolist()) | {t}
    rep = run_attack(m, cfg, trials=4, forged=f)
    assert rep.sole_real_neighbour == 0.0
    assert not rep.disclosed
    # the observer row: the other fakes, then the target, then real users
    top = row.ids[:50].tolist()
    assert set(top) == block - {int(f.fakes[0])}


def test_frozen_rs_option_runs(synth):
    m, t = synth
    pol = SelectionPolicy("npns", 20, 1.0, 3)
    a = run_attack(m, AttackConfig(t, 8, pol, seed=3, freeze_rs=True), trials=3)
    b = run_attack(m, AttackConfig(t, 8, pol, seed=3), trials=3)
    assert a.trials == b.trials == 3
    assert np.isfinite(a.attack_mae) and np.isfinite(b.attack_mae)


def test_no_sensitive_items_gives_nan():
    from ppns.ratings import RatingMatrix

    triples = [(0, 0, 5), (0, 1, 4)] + [(u, i, 3) for u in range(1, 5) for i in range(3)]
    m = RatingMatrix.from_triples(triples)
    rep = run_attack(m, AttackConfig(0, 2, SelectionPolicy("knn", 2)))
    assert np.isnan(rep.attack_mae)


def test_trials_validation(synth):
    m, t = synth
    with pytest.raises(ValidationError):
        run_attack(m, AttackConfig(t, 3, SelectionPolicy("knn", 2)), trials=0)
