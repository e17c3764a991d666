"""kNN attack simulation.

The attacker knows ``m`` of the target's ratings and registers ``k`` fake
users that rate exactly those items with the target's ratings.  A fake user
then asks for predictions on the target's remaining (sensitive) items; if the
target is its only real neighbour the predictions equal the target's ratings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .predict import predict_rating
from .ratings import RatingMatrix
from .selection import SelectionPolicy, select_neighbours
from .similarity import recommendation_sensitivity, similarity_row

DISCLOSURE_TOL = 1e-9


@dataclass(frozen=True)
class AttackConfig:
    target: int
    m: int
    policy: SelectionPolicy
    seed: int = 0
    n_fakes: int | None = None
    freeze_rs: bool = False

    @property
    def k_fakes(self) -> int:
        return self.policy.k if self.n_fakes is None else self.n_fakes


@dataclass(frozen=True, eq=False)
class ForgedProfiles:
    matrix: RatingMatrix
    target: int
    fakes: np.ndarray
    known_items: np.ndarray
    sensitive_items: np.ndarray


@dataclass
class DisclosureReport:
    target_in_neighbours: float
    sole_real_neighbour: float
    attack_mae: float
    trials: int
    trial_maes: list = field(default_factory=list)

    @property
    def disclosed(self) -> bool:
        """Every sensitive rating was recovered exactly in every trial."""
        return self.attack_mae <= DISCLOSURE_TOL


def _fake_ids(row_ids, count):
    if not row_ids:
        return list(range(count))
    top = row_ids[-1]
    if isinstance(top, (int, np.integer)):
        return [int(top) + 1 + j for j in range(count)]
    return [f"{top}~fake{j:06d}" for j in range(count)]


def forge_profiles(matrix: RatingMatrix, config: AttackConfig) -> ForgedProfiles:
    """Append ``k`` fake rows copying ``m`` randomly chosen target ratings.

    The input matrix is left untouched.
    """
    if matrix.axis != "user":
        raise ValidationError("the kNN attack is user-based; pass a user-axis matrix")
    cols, vals = matrix.row(config.target)
    if config.m > len(cols):
        raise ValidationError(f"m={config.m} exceeds the target's {len(cols)} ratings")
    if config.m < 1:
        raise ValidationError("m must be >= 1")
    rng = np.random.default_rng([int(config.seed), int(config.target)])
    pick = np.sort(rng.choice(len(cols), size=config.m, replace=False))
    known = cols[pick]
    copied = {int(c): int(v) for c, v in zip(known, vals[pick])}
    n_fakes = config.k_fakes
    augmented = matrix.with_rows(_fake_ids(matrix.row_ids, n_fakes), [copied] * n_fakes)
    fakes = np.arange(matrix.n_users, matrix.n_users + n_fakes)
    sensitive = np.setdiff1d(cols, known)
    return ForgedProfiles(augmented, config.target, fakes, known, sensitive)


def run_attack(matrix: RatingMatrix, config: AttackConfig, trials: int = 1, forged: ForgedProfiles | None = None) -> DisclosureReport:
    """Run ``trials`` attack rounds, each with a randomly chosen fake observer.

    Per trial the observer's neighbours are selected with ``config.policy``
    and every sensitive item is predicted; the trial's attack MAE is the mean
    absolute gap to the target's true ratings (NaN without sensitive items).
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    forged = forged or forge_profiles(matrix, config)
    A, target = forged.matrix, forged.target
    policy = config.policy
    fake_set = set(forged.fakes.tolist())
    truth = {int(x): A.get(target, int(x)) for x in forged.sensitive_items}
    frozen_rs = None
    if config.freeze_rs and policy.method != "knn":
        frozen_rs = recommendation_sensitivity(matrix, "target-local", target=target).rs
    rows, rs_cache = {}, {}

    in_nbr = sole = 0
    maes = []
    for t in range(trials):
        rng = np.random.default_rng([int(config.seed), int(target), t])
        observer = int(forged.fakes[rng.integers(len(forged.fakes))])
        if observer not in rows:
            rows[observer] = similarity_row(A, observer)
            if policy.method != "knn" and frozen_rs is None:
                rs_cache[observer] = recommendation_sensitivity(A, "target-local", target=observer).rs
        rs = frozen_rs if frozen_rs is not None else rs_cache.get(observer)
        nb = select_neighbours(rows[observer], policy, rs, rng)
        members = nb.ids.tolist()
        real = [u for u in members if u not in fake_set]
        in_nbr += target in members
        sole += real == [target]
        if truth:
            fb = A.mean_rating(observer)
            errs = [abs(predict_rating(A, nb, x, fallback=fb).value - r) for x, r in truth.items()]
            maes.append(math.fsum(errs) / len(errs))
        else:
            maes.append(float("nan"))
    return DisclosureReport(
        target_in_neighbours=in_nbr / trials,
        sole_real_neighbour=sole / trials,
        attack_mae=float(np.mean(maes)),
        trials=trials,
        trial_maes=maes,
    )
