"""Command line entry point.

Exit codes: 0 success, 1 optimality check failed, 2 invalid input, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .experiment import ExperimentSpec, load_matrix, run_experiment
from .metrics import verify_allocation_optimality, write_optimality_csv
from .selection import METHODS
from .similarity import selection_weights, similarity_row, write_similarity_cache, SimilarityRow

EXIT_OK, EXIT_CHECK, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3


def _add_dataset(p):
    p.add_argument("--dataset", required=True, help="ratings file")
    p.add_argument("--format", dest="fmt", choices=["movielens", "csv"], default="movielens")
    p.add_argument("--mode", choices=["user", "item"], default="user")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppns", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an accuracy or attack experiment grid", allow_abbrev=False)
    _add_dataset(run)
    run.add_argument("--method", nargs="+", default=list(METHODS), choices=METHODS)
    run.add_argument("--k", nargs="+", type=int, default=[100])
    run.add_argument("--epsilon", nargs="+", type=float, default=[1.0])
    run.add_argument("--beta", nargs="+", type=int, default=[1])
    run.add_argument("--rho", type=float, default=0.5)
    run.add_argument("--pncf-laplace-scale", type=float, default=None,
                     help="Laplace scale for PNCF similarity noise (default 2*rs/epsilon; 0 disables)")
    run.add_argument("--lambda-mode", choices=["attack", "formula"], default="attack")
    run.add_argument("--rs-scope", choices=["target-local", "global"], default="target-local")
    run.add_argument("--attack-m", nargs="+", type=int, default=[],
                     help="known-rating counts; giving this runs the kNN attack experiment")
    run.add_argument("--trials", type=int, default=1,
                     help="replicate seeds (accuracy) or rounds per target (attack)")
    run.add_argument("--targets", type=int, default=200, help="targets per replicate (accuracy)")
    run.add_argument("--attack-targets", type=int, default=20)
    run.add_argument("--allow-large-beta", action="store_true")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="results")

    opt = sub.add_parser("optimality", help="check the closed-form allocation by enumeration", allow_abbrev=False)
    opt.add_argument("--k-max", type=int, default=4)
    opt.add_argument("--beta-max", type=int, default=4)
    opt.add_argument("--fixtures", type=int, default=20)
    opt.add_argument("--epsilon", type=float, default=1.0)
    opt.add_argument("--rs", type=float, default=0.05)
    opt.add_argument("--seed", type=int, default=0)
    opt.add_argument("--out", default="optimality.csv")

    sim = sub.add_parser("similarity", help="write a similarity-row cache", allow_abbrev=False)
    _add_dataset(sim)
    sim.add_argument("--target", nargs="+", required=True, help="external ids of target rows")
    sim.add_argument("--out", required=True)

    bench = sub.add_parser("bench", help="compare compiled and Python kernels", allow_abbrev=False)
    bench.add_argument("--dataset", default=None, help="optional u.data for an end-to-end timing")
    bench.add_argument("--repeat", type=int, default=3)
    return parser


def _cmd_run(args) -> int:
    spec = ExperimentSpec(
        dataset=args.dataset, fmt=args.fmt, mode=args.mode, methods=tuple(args.method),
        ks=tuple(args.k), epsilons=tuple(args.epsilon), betas=tuple(args.beta), ms=tuple(args.attack_m),
        trials=args.trials, seed=args.seed, out=args.out, targets=args.targets,
        attack_targets=args.attack_targets, rho=args.rho, laplace_scale=args.pncf_laplace_scale,
        lambda_mode=args.lambda_mode, rs_scope=args.rs_scope,
        allow_large_beta=args.allow_large_beta, workers=args.workers,
    )
    for path in run_experiment(spec):
        print(path)
    return EXIT_OK


def random_descending_row(rng, n) -> SimilarityRow:
    sims = np.sort(rng.uniform(0.0, 1.0, size=n))[::-1]
    return SimilarityRow(0, np.arange(1, n + 1), sims)


def _cmd_optimality(args) -> int:
    rng = np.random.default_rng(args.seed)
    reports, failures = [], 0
    for _ in range(args.fixtures):
        for k in range(1, args.k_max + 1):
            for beta in range(1, args.beta_max + 1):
                row = random_descending_row(rng, k * beta)
                w = selection_weights(row, args.epsilon, k, args.rs)
                rep = verify_allocation_optimality(row, k, beta, w)
                failures += not rep.optimal
                reports.append(rep)
    write_optimality_csv(reports, args.out)
    print(f"{len(reports) - failures}/{len(reports)} instances optimal; wrote {args.out}")
    return EXIT_OK if failures == 0 else EXIT_CHECK


def _cmd_similarity(args) -> int:
    spec = ExperimentSpec(dataset=args.dataset, fmt=args.fmt, mode=args.mode)
    matrix = load_matrix(spec)
    id_type = type(matrix.row_ids[0]) if matrix.row_ids else str
    rows = []
    for ext in args.target:
        try:
            key = id_type(ext)
        except ValueError:
            raise ValidationError(f"target id {ext!r} does not match the dataset's id type") from None
        rows.append(similarity_row(matrix, matrix.user_index(key)))
    write_similarity_cache(matrix, rows, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .bench import main as bench_main

    bench_main(dataset=args.dataset, repeat=args.repeat)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "optimality": _cmd_optimality, "similarity": _cmd_similarity, "bench": _cmd_bench}[args.command]
    try:
        return handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
