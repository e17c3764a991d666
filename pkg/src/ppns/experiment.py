"""Parameter-grid experiments with CSV and gnuplot ``.dat`` output.

Two kinds of experiment share one spec:

* accuracy (no ``ms`` grid): leave-one-out MAE on randomly sampled targets,
  one replicate per derived seed;
* attack (``ms`` grid given): kNN attack against sampled targets, reporting
  disclosure rates and the attacker's MAE on the hidden ratings.

Every output row carries its full parameter tuple, and all randomness is
derived from the master seed, so re-running a spec reproduces the files
byte for byte.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .attack import AttackConfig, forge_profiles, run_attack
from .errors import ValidationError
from .predict import evaluate_mae, sample_targets
from .ratings import RatingMatrix, load, transpose
from .selection import LAMBDA_MODES, METHODS, SelectionPolicy

log = logging.getLogger(__name__)

ACCURACY_FIELDS = ["method", "k", "epsilon", "beta", "seed", "mae", "n"]
ATTACK_FIELDS = ["method", "k", "epsilon", "beta", "m", "seed", "target_in_nbr", "sole_real", "attack_mae"]


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: str
    fmt: str = "movielens"
    mode: str = "user"
    methods: tuple = METHODS
    ks: tuple = (100,)
    epsilons: tuple = (1.0,)
    betas: tuple = (1,)
    ms: tuple = ()
    trials: int = 1
    seed: int = 0
    out: str = "results"
    targets: int = 200
    attack_targets: int = 20
    rho: float = 0.5
    laplace_scale: float | None = None
    lambda_mode: str = "attack"
    pncf_noise: bool = True
    rs_scope: str = "target-local"
    allow_large_beta: bool = False
    workers: int = 1

    @property
    def is_attack(self) -> bool:
        return bool(self.ms)

    def validate(self, n_rows: int | None = None) -> None:
        """Check the grid; with ``n_rows`` also the ``beta <= n/(2k)`` bound."""
        if not self.methods:
            raise ValidationError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValidationError(f"unknown method(s) {bad}; choose from {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ValidationError("methods must not repeat")
        if self.mode not in ("user", "item"):
            raise ValidationError("mode must be 'user' or 'item'")
        if self.is_attack and self.mode != "user":
            raise ValidationError("the kNN attack is user-based; use --mode user")
        for name in ("ks", "epsilons", "betas"):
            grid = getattr(self, name)
            if not grid:
                raise ValidationError(f"{name} grid is empty")
            if any(not v > 0 for v in grid):
                raise ValidationError(f"{name} grid values must be positive, got {list(grid)}")
        if any(not (isinstance(v, (int, np.integer)) and v > 0) for v in self.ks + self.betas + self.ms):
            raise ValidationError("k, beta and m values must be positive integers")
        if self.trials < 1 or self.targets < 1 or self.attack_targets < 1:
            raise ValidationError("trials and target counts must be >= 1")
        if self.lambda_mode not in LAMBDA_MODES:
            raise ValidationError(f"lambda mode must be one of {LAMBDA_MODES}")
        if not 0 < self.rho < 1:
            raise ValidationError("rho must lie in (0, 1)")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        if n_rows is not None:
            for k, beta in itertools.product(self.ks, self.betas):
                hard = n_rows - 1
                if beta * k > hard:
                    raise ValidationError(f"beta={beta}, k={k} needs {beta * k} candidates; only {hard} exist")
                bound = n_rows // (2 * k)
                if beta > max(bound, 1) and not self.allow_large_beta:
                    raise ValidationError(
                        f"beta={beta} exceeds the bound floor(n/(2k)) = {bound} for n={n_rows}, k={k}; "
                        "candidates past the middle of the list mostly have zero similarity "
                        "(pass --allow-large-beta to override)"
                    )
            if not self.is_attack and self.targets > n_rows:
                raise ValidationError(f"{self.targets} targets requested but only {n_rows} rows exist")

    def policy(self, method, k, epsilon, beta, seed) -> SelectionPolicy:
        return SelectionPolicy(
            method=method, k=int(k), epsilon=float(epsilon), beta=int(beta),
            lambda_mode=self.lambda_mode, rho=self.rho, laplace_scale=self.laplace_scale,
            pncf_noise=self.pncf_noise, rs_scope=self.rs_scope, seed=int(seed),
        )


def derive_seed(master: int, *index: int) -> int:
    """Independent 32-bit seed for task ``index`` under ``master``."""
    return int(np.random.SeedSequence([int(master), *map(int, index)]).generate_state(1)[0])


def fmt_num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def write_csv(path: Path, fields, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow([fmt_num(r[f]) if not isinstance(r[f], str) else r[f] for f in fields])


def load_matrix(spec: ExperimentSpec) -> RatingMatrix:
    matrix = load(spec.dataset, spec.fmt)
    return transpose(matrix) if spec.mode == "item" else matrix


# accuracy -------------------------------------------------------------------


def _accuracy_cell(args):
    matrix, policy, targets = args
    rep = evaluate_mae(matrix, policy, targets)
    return rep.mae, rep.n_predictions


def _grid(spec):
    """(method, k, epsilon, beta) cells in spec order."""
    return list(itertools.product(spec.methods, spec.ks, spec.epsilons, spec.betas))


def _run_pool(fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def run_accuracy(spec: ExperimentSpec, matrix: RatingMatrix):
    replicates = [derive_seed(spec.seed, r) for r in range(spec.trials)]
    target_sets = [sample_targets(matrix, spec.targets, s) for s in replicates]
    tasks, keys, index = [], [], {}
    rows = []
    for method, k, eps, beta in _grid(spec):
        for r, s in enumerate(replicates):
            # kNN ignores epsilon and beta; evaluate it once per (k, replicate)
            key = (method, k, r) if method == "knn" else (method, k, eps, beta, r)
            if key not in index:
                index[key] = len(tasks)
                tasks.append((matrix, spec.policy(method, k, eps, beta, s), target_sets[r]))
            keys.append(((method, k, eps, beta, s), index[key]))
    results = _run_pool(_accuracy_cell, tasks, spec.workers)
    for (method, k, eps, beta, s), i in keys:
        mae, n = results[i]
        rows.append(dict(method=method, k=k, epsilon=eps, beta=beta, seed=s, mae=mae, n=n))
    target_rows = [
        dict(seed=s, target=str(matrix.row_ids[t]))
        for s, ts in zip(replicates, target_sets) for t in ts
    ]
    return rows, target_rows


# attack ---------------------------------------------------------------------


def _attack_cell(args):
    matrix, config, trials = args
    rep = run_attack(matrix, config, trials)
    return rep.target_in_neighbours, rep.sole_real_neighbour, rep.attack_mae


def run_attack_grid(spec: ExperimentSpec, matrix: RatingMatrix):
    eligible = np.flatnonzero(matrix.row_counts > max(spec.ms))
    if len(eligible) < spec.attack_targets:
        raise ValidationError(f"only {len(eligible)} users have more than m={max(spec.ms)} ratings")
    rng = np.random.default_rng(derive_seed(spec.seed, 0))
    targets = sorted(rng.choice(eligible, size=spec.attack_targets, replace=False).tolist())
    cells = list(itertools.product(spec.methods, spec.ks, spec.epsilons, spec.betas, spec.ms))
    tasks = []
    for method, k, eps, beta, m in cells:
        for t in targets:
            policy = spec.policy(method, k, eps, beta, spec.seed)
            tasks.append((matrix, AttackConfig(int(t), int(m), policy, seed=spec.seed), spec.trials))
    results = _run_pool(_attack_cell, tasks, spec.workers)
    per_target, pooled = [], []
    it = iter(results)
    for method, k, eps, beta, m in cells:
        block = []
        for t in targets:
            tin, sole, mae = next(it)
            block.append((tin, sole, mae))
            per_target.append(dict(
                method=method, k=k, epsilon=eps, beta=beta, m=m, seed=spec.seed,
                target=str(matrix.row_ids[t]), target_in_nbr=tin, sole_real=sole, attack_mae=mae,
            ))
        arr = np.array(block, dtype=np.float64)
        pooled.append(dict(
            method=method, k=k, epsilon=eps, beta=beta, m=m, seed=spec.seed,
            target_in_nbr=math.fsum(arr[:, 0]) / len(arr),
            sole_real=math.fsum(arr[:, 1]) / len(arr),
            attack_mae=math.fsum(arr[:, 2]) / len(arr),
        ))
    return pooled, per_target


# plot data ------------------------------------------------------------------


def emit_plot_data(rows, out_dir, prefix: str, x_field: str, y_field: str, group_fields) -> list[Path]:
    """Write one two-column ``x y`` file per curve.

    Rows sharing ``group_fields`` form a curve; ``y`` is averaged over rows
    with equal ``x`` (replicate seeds).  Lines are sorted by ``x``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    curves: dict[tuple, dict] = {}
    for r in rows:
        key = tuple(r[g] for g in group_fields)
        curves.setdefault(key, {}).setdefault(r[x_field], []).append(float(r[y_field]))
    paths = []
    for key in sorted(curves, key=lambda k: tuple(map(str, k))):
        name = "_".join([prefix] + [f"{g}{fmt_num(v)}" if g != "method" else str(v) for g, v in zip(group_fields, key)])
        path = out_dir / f"{name}_vs_{x_field}.dat"
        pts = curves[key]
        lines = [f"{fmt_num(x)} {fmt_num(math.fsum(ys) / len(ys))}" for x, ys in sorted(pts.items())]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


_SWEEPS = {"beta": "betas", "k": "ks", "epsilon": "epsilons", "m": "ms"}


def run_experiment(spec: ExperimentSpec, matrix: RatingMatrix | None = None) -> list[Path]:
    """Validate, run and write all report files; returns their paths."""
    spec.validate()
    if matrix is None:
        matrix = load_matrix(spec)
    spec.validate(matrix.n_users)
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if spec.is_attack:
        pooled, per_target = run_attack_grid(spec, matrix)
        p = out / "attack.csv"
        write_csv(p, ATTACK_FIELDS, pooled)
        written.append(p)
        p = out / "attack_per_target.csv"
        write_csv(p, ATTACK_FIELDS[:6] + ["target"] + ATTACK_FIELDS[6:], per_target)
        written.append(p)
        rows, prefix, y, dims = pooled, "attack", "attack_mae", ["method", "k", "epsilon", "beta", "m"]
    else:
        rows, target_rows = run_accuracy(spec, matrix)
        p = out / "accuracy.csv"
        write_csv(p, ACCURACY_FIELDS, rows)
        written.append(p)
        p = out / "targets.csv"
        write_csv(p, ["seed", "target"], target_rows)
        written.append(p)
        prefix, y, dims = "accuracy", "mae", ["method", "k", "epsilon", "beta"]
    swept = [d for d in dims[1:] if len(getattr(spec, _SWEEPS[d])) > 1] or ["beta"]
    for x in swept:
        written += emit_plot_data(rows, out, prefix, x, y, [d for d in dims if d != x])
    log.info("wrote %d files to %s", len(written), out)
    return written
