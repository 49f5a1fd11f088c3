"""Command-line front end: learn, eval, cv, and encode subcommands.

Exit codes: 0 on success, 1 on argument/data/config errors, 2 when the
time budget ran out before any usable model was found.

Per-class scope (the default) runs one optimizer per class and reports
the union of the learned rule sets; classes absent from the training
data contribute no rules.  With --jobs > 1 the per-class runs and the
cross-validation folds are dispatched to a thread pool; result
aggregation follows the input order, so output is stable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .dataset import BinDataset, DatasetError, binarize, kfold_split, load_csv, sanitize
from .dimacs import emit_dimacs
from .encoder import (EncodingError, Scope, build_bounded, build_perfect, build_sparse,
                      lam_to_cost)
from .formula import FormulaError
from .model import DecisionSet, ModelError, evaluate, load_model, save_model
from .optimizer import (ContradictionError, OptimizerError, SearchLimits, SolveOutcome,
                        default_node_budget, minimize_bounded, minimize_perfect,
                        minimize_sparse)

MODES = ("opt", "mopt", "sparse")
SCOPES = ("aggregated", "per-class")

_print_lock = threading.Lock()


class CliError(ValueError):
    """Configuration problem detected after argument parsing."""


@dataclass
class RunConfig:
    mode: str
    scope: str
    lam: float | None
    bins: int
    n0: int | None
    step: int
    seed: int
    limits: SearchLimits
    jobs: int
    verbose: bool

    @staticmethod
    def from_args(args) -> "RunConfig":
        mode = getattr(args, "mode", "opt")
        lam = getattr(args, "lam", None)
        if mode == "sparse" and lam is None:
            raise CliError("--lambda is required with --mode sparse")
        if mode != "sparse" and lam is not None:
            raise CliError("--lambda only applies to --mode sparse")
        if lam is not None and lam < 0:
            raise CliError("--lambda must be >= 0")
        jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
        if jobs < 1:
            raise CliError("--jobs must be >= 1")
        limits = SearchLimits(wall_time_budget=args.time_limit,
                              per_solve_budget=args.solve_limit)
        return RunConfig(mode=mode, scope=getattr(args, "scope", "per-class"), lam=lam,
                         bins=args.bins, n0=getattr(args, "n0", None), step=args.step,
                         seed=args.seed, limits=limits, jobs=jobs, verbose=args.verbose)


def _emit_progress(record: dict, verbose: bool) -> None:
    if not verbose:
        return
    with _print_lock:
        print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _load_bindata(path: str, bins: int) -> BinDataset:
    return binarize(load_csv(path), q=bins)


def _sanitized(ds: BinDataset, config: RunConfig) -> BinDataset:
    """Deduplicate for training; exact-fit modes refuse contradictory data."""
    kind = "sparse" if config.mode == "sparse" else "perfect"
    clean, report = sanitize(ds, kind)
    if kind == "perfect" and report.removed > 0:
        raise CliError(
            "dataset has contradictory examples (weight %d removed by sanitize); "
            "clean the data or use --mode sparse" % report.removed
        )
    return clean


def _run_one(ds: BinDataset, scope: Scope, config: RunConfig, context: dict) -> SolveOutcome:
    def progress(record):
        _emit_progress({**context, **record}, config.verbose)

    if config.mode == "opt":
        return minimize_perfect(ds, scope, limits=config.limits, progress=progress)
    if config.mode == "mopt":
        return minimize_bounded(ds, scope, n0=config.n0, step=config.step,
                                limits=config.limits, progress=progress)
    return minimize_sparse(ds, scope, config.lam, n0=config.n0, step=config.step,
                           limits=config.limits, progress=progress)


def _learn_model(ds: BinDataset, config: RunConfig, context: dict | None = None):
    """Train per the configured scope; returns (DecisionSet, status) or
    raises CliTimeout when nothing usable was found in time."""
    context = context or {}
    if config.scope == "aggregated":
        outcome = _run_one(ds, Scope.aggregated(), config, context)
        if outcome.decision_set is None:
            raise CliTimeout(outcome)
        return outcome.decision_set, outcome.status
    present = sorted({cls for _, cls, _ in ds.examples})
    def job(target):
        return _run_one(ds, Scope.per_class(target), config,
                        {**context, "class": ds.classes[target]})
    if config.jobs > 1 and len(present) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(job, present))
    else:
        outcomes = [job(target) for target in present]
    rules = []
    objectives = {}
    total = 0
    status = "optimal"
    for target, outcome in zip(present, outcomes):
        if outcome.decision_set is None:
            raise CliTimeout(outcome)
        rules.extend(outcome.decision_set.rules)
        total += outcome.decision_set.total_size
        objectives[ds.classes[target]] = outcome.objective
        if outcome.status != "optimal":
            status = "feasible"
    metadata = {"mode": config.mode, "scope": "per-class",
                "objective": sum(objectives.values()), "per_class_objectives": objectives}
    if config.mode == "sparse":
        metadata["lambda_cost"] = lam_to_cost(config.lam, ds.total_weight)
    dset = DecisionSet(rules=rules, classes=list(ds.classes), total_size=total,
                       metadata=metadata)
    return dset, status


class CliTimeout(Exception):
    def __init__(self, outcome: SolveOutcome):
        super().__init__("time budget exhausted before a usable model was found")
        self.outcome = outcome


def _print_model(dset: DecisionSet, status: str, ds: BinDataset) -> None:
    for rule in dset.rules:
        print("rule: %s" % rule.render(ds.feature_names, ds.classes))
    objective = dset.metadata.get("objective", dset.total_size)
    print("status=%s total_size=%d objective=%s rules=%d"
          % (status, dset.total_size, objective, dset.num_rules))


def cmd_learn(args) -> int:
    config = RunConfig.from_args(args)
    ds = _sanitized(_load_bindata(args.data, config.bins), config)
    try:
        dset, status = _learn_model(ds, config)
    except CliTimeout as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    # normalize to the CLI vocabulary; the library names its modes
    # perfect/bounded/sparse and its scopes aggregated/per_class
    dset.metadata["mode"] = config.mode
    dset.metadata["scope"] = config.scope
    _print_model(dset, status, ds)
    if args.out:
        save_model(dset, args.out)
        print("model written to %s" % args.out)
    return 0


def cmd_eval(args) -> int:
    dset = load_model(args.model)
    ds = _load_bindata(args.data, args.bins)
    report = evaluate(dset, ds, mode="standard")
    counts = {}
    for outcome in report.per_example:
        counts[outcome] = counts.get(outcome, 0) + 1
    print("examples=%d misclassified=%d accuracy=%.1f"
          % (report.num_examples, report.errors, report.accuracy))
    print("outcomes: " + " ".join("%s=%d" % (k, counts[k]) for k in sorted(counts)))
    return 0


def cmd_cv(args) -> int:
    config = RunConfig.from_args(args)
    if args.folds < 2:
        raise CliError("--folds must be >= 2")
    ds = _load_bindata(args.data, config.bins)
    plan = kfold_split(ds, args.folds, config.seed)

    def job(fold):
        train = _sanitized(ds.subset(plan.train_indices(fold)), config)
        dset, status = _learn_model(train, config, context={"fold": fold})
        report = evaluate(dset, ds.subset(plan.test_indices(fold)), mode="standard")
        return dset, status, report

    folds = list(range(args.folds))
    try:
        if config.jobs > 1 and args.folds > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                results = list(pool.map(job, folds))
        else:
            results = [job(fold) for fold in folds]
    except CliTimeout as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    accuracies = []
    sizes = []
    for fold, (dset, status, report) in zip(folds, results):
        accuracies.append(report.accuracy)
        sizes.append(dset.total_size)
        print("fold %d: accuracy=%.1f total_size=%d status=%s"
              % (fold, report.accuracy, dset.total_size, status))
    print("mean accuracy=%.1f mean total_size=%.1f"
          % (sum(accuracies) / len(accuracies), sum(sizes) / len(sizes)))
    return 0


def _encode_one(ds: BinDataset, scope: Scope, config: RunConfig, n: int, path: str) -> None:
    if config.mode == "opt":
        bundle = build_perfect(ds, n, scope)
    elif config.mode == "mopt":
        bundle = build_bounded(ds, n, scope)
    else:
        bundle = build_sparse(ds, n, lam_to_cost(config.lam, ds.total_weight), scope)
    emit_dimacs(bundle.formula, path)
    sidecar = {
        "varmap": bundle.varmap.to_json_dict(),
        "mode": bundle.mode,
        "scope": scope.kind,
        "target": None if scope.target is None else ds.classes[scope.target],
        "classes": list(ds.classes),
        "feature_names": list(ds.feature_names),
        "lambda_cost": bundle.lambda_cost,
    }
    with open(path + ".map.json", "w", encoding="utf-8") as handle:
        json.dump(sidecar, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print("wrote %s and %s" % (path, path + ".map.json"))


def cmd_encode(args) -> int:
    config = RunConfig.from_args(args)
    ds = _sanitized(_load_bindata(args.data, config.bins), config)
    n = config.n0 if config.n0 is not None else default_node_budget(ds.num_features)
    if config.scope == "aggregated":
        _encode_one(ds, Scope.aggregated(), config, n, args.dimacs)
        return 0
    root, ext = os.path.splitext(args.dimacs)
    for target in range(len(ds.classes)):
        path = "%s.class%d%s" % (root, target, ext)
        _encode_one(ds, Scope.per_class(target), config, n, path)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; config errors are exit 1
        self.print_usage(sys.stderr)
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


def _add_common(sub, learning: bool) -> None:
    sub.add_argument("--data", required=True, help="input CSV (last column is the class)")
    sub.add_argument("--bins", type=int, default=2,
                     help="quantization bins for numeric features (default 2)")
    sub.add_argument("--seed", type=int, default=1234)
    sub.add_argument("--verbose", action="store_true",
                     help="line-delimited JSON progress on stderr")
    sub.add_argument("--jobs", type=int, default=None,
                     help="worker threads (default: available parallelism)")
    if learning:
        sub.add_argument("--mode", choices=MODES, default="opt")
        sub.add_argument("--scope", choices=SCOPES, default="per-class")
        sub.add_argument("--lambda", dest="lam", type=float, default=None,
                         help="per-node penalty rate (sparse mode only)")
        sub.add_argument("--n0", type=int, default=None,
                         help="initial node budget (mopt/sparse; default 2*(K+2) capped at 32)")
        sub.add_argument("--step", type=int, default=10,
                         help="node budget increment between retries")
        sub.add_argument("--time-limit", type=float, default=600.0,
                         help="total seconds for the whole search")
        sub.add_argument("--solve-limit", type=float, default=60.0,
                         help="seconds per solver call")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rulesat",
                     description="Learn minimum-size decision sets with a SAT solver.")
    subs = parser.add_subparsers(dest="command", required=True)

    learn = subs.add_parser("learn", help="train a decision set from a CSV file")
    _add_common(learn, learning=True)
    learn.add_argument("--out", default=None, help="write the model JSON here")
    learn.set_defaults(func=cmd_learn)

    ev = subs.add_parser("eval", help="score a saved model against a CSV file")
    _add_common(ev, learning=False)
    ev.add_argument("--model", required=True, help="model JSON from learn")
    ev.set_defaults(func=cmd_eval)

    cv = subs.add_parser("cv", help="stratified k-fold cross-validation")
    _add_common(cv, learning=True)
    cv.add_argument("--folds", type=int, default=5)
    cv.set_defaults(func=cmd_cv)

    enc = subs.add_parser("encode", help="write the training CNF/WCNF without solving")
    _add_common(enc, learning=True)
    enc.add_argument("--dimacs", required=True, help="output DIMACS path")
    enc.set_defaults(func=cmd_encode)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except (CliError, DatasetError, EncodingError, ModelError, FormulaError,
            OptimizerError, ContradictionError, OSError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
