"""Command-line entry point producing reproducible JSON/CSV artifacts.

Subcommands: solve (one classification program), ccp (one
chance-constrained program), verify-lemmas (exact binomial sweep), and
experiment (the Monte Carlo harness).  Validation problems exit with
code 2 and runtime failures with code 1; both print a one-line JSON
object {"error": <category>, "message": ...} on stderr.
"""

from __future__ import annotations

import argparse
import csv as csv_mod
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, bounds, harness
from .ccp import CCPInstance, linear_objective, solve_ccp
from .errors import (ComputationFailure, DomainError, NonFiniteValue,
                     NPConvexError, SchemaError, UnknownLabel,
                     ValidationFailure)
from .hypothesis import (BaseDictionary, ConstantClassifier, DecisionStump,
                         build_stump_dictionary)
from .np_solver import NPConfig, solve_np, split_pooled
from .risk import Sample
from .surrogate import by_name


def load_csv(path):
    """Parse a UTF-8 CSV with a header row into (X, y) or a bare matrix.

    A column named `y` holds labels in {-1, 1}; without one the file is a
    plain feature matrix (scenario draws) and y comes back as None.
    Ragged rows, non-numeric cells, or an empty file raise SchemaError;
    NaN/inf features raise NonFiniteValue; bad labels raise UnknownLabel.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv_mod.reader(fh)
            rows = [r for r in reader if r]
    except OSError as err:
        raise SchemaError(f"cannot read {path}: {err}")
    if len(rows) < 2:
        raise SchemaError(f"{path} needs a header row and at least one data row")
    header = [c.strip() for c in rows[0]]
    if len(set(header)) != len(header):
        raise SchemaError(f"{path} has duplicate column names")
    y_col = header.index("y") if "y" in header else None
    width = len(header)
    feats, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise SchemaError(
                f"{path}:{lineno} has {len(row)} cells, expected {width}")
        vals = []
        for name, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise SchemaError(
                    f"{path}:{lineno} column {name!r}: {cell!r} is not a number")
            vals.append(v)
        if y_col is not None:
            lab = vals.pop(y_col)
            if lab not in (-1.0, 1.0):
                raise UnknownLabel(
                    f"{path}:{lineno}: label must be -1 or 1, got {lab}")
            labels.append(lab)
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteValue(f"{path}:{lineno} has a non-finite feature")
        feats.append(vals)
    if y_col is not None and len(header) == 1:
        raise SchemaError(f"{path} has labels but no feature columns")
    X = np.asarray(feats, dtype=float)
    y = np.asarray(labels, dtype=float) if y_col is not None else None
    return X, y


def _require_labels(X, y, path):
    if y is None:
        raise SchemaError(f"{path} is missing the label column 'y'")
    return X, y


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _maybe_stamp(report: dict, args) -> dict:
    if not args.no_timestamp:
        report["timestamp"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
    return report


def _write_trials_csv(rows, path: Path) -> None:
    keys = sorted({k for r in rows for k in r})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv_mod.writer(fh)
        writer.writerow(keys)
        for r in rows:
            writer.writerow(["" if r.get(k) is None else r.get(k) for k in keys])


def _scenario_from_config(cfg: dict):
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise SchemaError("scenario config must be an object with a 'kind'")
    kind = cfg["kind"]
    p = cfg.get("p", 0.5)
    if kind == "prop31":
        return harness.Scenario.prop31(cfg["alpha"], p)
    if kind == "gaussian_1d":
        return harness.Scenario.gaussian_1d(cfg["mu_minus"], cfg["mu_plus"],
                                            cfg["sigma"], p)
    if kind == "custom_csv":
        X, y = load_csv(cfg["data"])
        _require_labels(X, y, cfg["data"])
        sample = split_pooled((X, y))
        return harness.Scenario.custom_csv(sample.negatives, sample.positives, p)
    raise SchemaError(f"unknown scenario kind {kind!r}")


def _dictionary_from_config(cfg: dict) -> BaseDictionary:
    if not isinstance(cfg, dict) or "thresholds" not in cfg:
        raise SchemaError("dictionary config must be an object with 'thresholds'")
    polarities = {"both": (1, -1), "positive": (1,), "negative": (-1,)}.get(
        cfg.get("polarities", "both"))
    if polarities is None:
        raise SchemaError("dictionary polarities must be both/positive/negative")
    bases = []
    if cfg.get("include_constant", True):
        bases.append(ConstantClassifier(-1.0))
    for t in cfg["thresholds"]:
        for pol in polarities:
            bases.append(DecisionStump(0, float(t), pol))
    return BaseDictionary(bases, dim=1)


def _cmd_solve(args) -> int:
    X, y = load_csv(args.data)
    _require_labels(X, y, args.data)
    sample = split_pooled((X, y))
    dictionary = build_stump_dictionary(X, args.stumps)
    bases = list(dictionary.bases)
    if args.no_constant:
        bases = [b for b in bases if not isinstance(b, ConstantClassifier)]
    elif not any(isinstance(b, ConstantClassifier) for b in bases):
        bases.insert(0, ConstantClassifier(-1.0))
    dictionary = BaseDictionary(bases, dim=X.shape[1])
    cfg = NPConfig(alpha=args.alpha, delta=args.delta,
                   surrogate=by_name(args.surrogate),
                   feas_tol=args.feas_tol, opt_tol=args.opt_tol,
                   max_iters=args.max_iters)
    sol = solve_np(sample, dictionary, cfg)
    report = _maybe_stamp({
        "command": "solve",
        "version": __version__,
        "config": {"alpha": args.alpha, "delta": args.delta,
                   "surrogate": args.surrogate, "stumps": args.stumps,
                   "seed": args.seed, "data": args.data},
        "dictionary": dictionary.to_json(),
        "solution": sol.to_json(),
    }, args)
    _emit(report, args.out)
    return 0


def _cmd_ccp(args) -> int:
    X, _ = load_csv(args.data)
    dictionary = build_stump_dictionary(X, args.stumps)
    bases = list(dictionary.bases)
    if args.no_constant:
        bases = [b for b in bases if not isinstance(b, ConstantClassifier)]
    elif not any(isinstance(b, ConstantClassifier) for b in bases):
        bases.insert(0, ConstantClassifier(-1.0))
    dictionary = BaseDictionary(bases, dim=X.shape[1])
    coeffs = [float(c) for c in args.objective.split(",")]
    if len(coeffs) != dictionary.m:
        raise DomainError(
            f"objective has {len(coeffs)} coefficients for {dictionary.m} bases")
    inst = CCPInstance(alpha=args.alpha, delta=args.delta,
                       surrogate=by_name(args.surrogate),
                       g_matrix=dictionary.evaluate_matrix(X),
                       **linear_objective(coeffs))
    sol = solve_ccp(inst, feas_tol=args.feas_tol, opt_tol=args.opt_tol,
                    max_iters=args.max_iters)
    report = _maybe_stamp({
        "command": "ccp",
        "version": __version__,
        "config": {"alpha": args.alpha, "delta": args.delta,
                   "surrogate": args.surrogate, "stumps": args.stumps,
                   "objective": coeffs, "seed": args.seed, "data": args.data},
        "dictionary": dictionary.to_json(),
        "solution": sol.to_json(),
    }, args)
    _emit(report, args.out)
    return 0


def _cmd_verify_lemmas(args) -> int:
    sweep = bounds.sweep_binomial_lemmas(n_max=args.n_max,
                                         q_points=args.q_points,
                                         t_points=args.t_points)
    report = _maybe_stamp({
        "command": "verify-lemmas",
        "version": __version__,
        "config": {"n_max": args.n_max, "q_points": args.q_points,
                   "t_points": args.t_points},
        "sweep": sweep,
    }, args)
    _emit(report, args.out)
    return 0 if sweep["all_hold"] else 1


def _experiment_dispatch(kind: str, cfg: dict, seed: int) -> dict:
    if kind == "counterexample":
        return harness.run_counterexample(
            cfg["alpha"], cfg["n_minus"], cfg["n_plus"], cfg["trials"], seed,
            tau=cfg.get("tau"), grid_size=cfg.get("grid_size", 1000))
    scenario = _scenario_from_config(cfg["scenario"])
    if kind == "ccp":
        dictionary = _dictionary_from_config(cfg["constraint"])
        bases = [lambda row, b=b: float(b.evaluate_batch(
            np.asarray(row, dtype=float).reshape(1, -1))[0])
            for b in dictionary.bases]
        return harness.run_ccp_feasibility(
            scenario, bases, cfg["objective"], cfg["alpha"], cfg["delta"],
            by_name(cfg.get("surrogate", "hinge")), cfg["n"], cfg["trials"],
            cfg.get("validation_draws", 10 ** 5), seed,
            f_star=cfg.get("f_star"), eps=cfg.get("eps"))
    dictionary = _dictionary_from_config(cfg["dictionary"])
    np_cfg = NPConfig(alpha=cfg["alpha"], delta=cfg["delta"],
                      surrogate=by_name(cfg.get("surrogate", "hinge")))
    if kind == "coverage":
        return harness.run_type1_coverage(
            scenario, dictionary, np_cfg, cfg["n_minus"], cfg["n_plus"],
            cfg["trials"], cfg.get("mc_draws", 10 ** 6), seed,
            kappa_scale=cfg.get("kappa_scale", 1.0))
    if kind == "rate":
        return harness.run_rate_experiment(
            scenario, dictionary, np_cfg, cfg["n_grid"], cfg["trials"], seed,
            eps_bar=cfg.get("eps_bar"),
            oracle_resolution=cfg.get("oracle_resolution", 1e-4),
            mc_draws=cfg.get("mc_draws", 10 ** 6))
    if kind == "sampling":
        return harness.run_sampling_scheme(
            scenario, dictionary, np_cfg, cfg["n"], cfg["trials"], seed,
            eps_bar=cfg.get("eps_bar"),
            tail_thresholds=cfg.get("tail_thresholds"),
            oracle_resolution=cfg.get("oracle_resolution", 1e-4),
            mc_draws=cfg.get("mc_draws", 10 ** 6))
    raise SchemaError(f"unknown experiment kind {kind!r}")


def _cmd_experiment(args) -> int:
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as err:
        raise SchemaError(f"cannot read {args.config}: {err}")
    except json.JSONDecodeError as err:
        raise SchemaError(f"{args.config} is not valid JSON: {err}")
    if not isinstance(cfg, dict):
        raise SchemaError("experiment config must be a JSON object")
    try:
        summary = _experiment_dispatch(args.kind, cfg, args.seed)
    except KeyError as err:
        raise SchemaError(f"experiment config is missing {err.args[0]!r}")
    rows = summary.pop("rows", None)
    report = _maybe_stamp({
        "command": "experiment",
        "version": __version__,
        "kind": args.kind,
        "seed": args.seed,
        "config": cfg,
        "summary": summary,
    }, args)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _emit(report, str(out_dir / "summary.json"))
        if rows:
            _write_trials_csv(rows, out_dir / "trials.csv")
    else:
        _emit(report, None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npconvex",
        description="Neyman-Pearson classification by convex aggregation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit the timestamp for byte-identical reports")

    p_solve = sub.add_parser("solve", help="solve one classification program")
    p_solve.add_argument("--data", required=True)
    p_solve.add_argument("--alpha", type=float, required=True)
    p_solve.add_argument("--delta", type=float, required=True)
    p_solve.add_argument("--surrogate", default="hinge")
    p_solve.add_argument("--stumps", type=int, default=3,
                         help="per-axis threshold count for the dictionary")
    p_solve.add_argument("--no-constant", action="store_true",
                         help="do not prepend the constant classifier -1")
    p_solve.add_argument("--feas-tol", type=float, default=1e-8)
    p_solve.add_argument("--opt-tol", type=float, default=1e-5)
    p_solve.add_argument("--max-iters", type=int, default=500)
    add_common(p_solve)
    p_solve.set_defaults(fn=_cmd_solve)

    p_ccp = sub.add_parser("ccp", help="solve one chance-constrained program")
    p_ccp.add_argument("--data", required=True,
                       help="CSV of scenario draws (no label column needed)")
    p_ccp.add_argument("--alpha", type=float, required=True)
    p_ccp.add_argument("--delta", type=float, required=True)
    p_ccp.add_argument("--surrogate", default="hinge")
    p_ccp.add_argument("--stumps", type=int, default=3)
    p_ccp.add_argument("--objective", required=True,
                       help="comma-separated coefficients of the linear objective")
    p_ccp.add_argument("--no-constant", action="store_true",
                       help="do not prepend the constant -1 base")
    p_ccp.add_argument("--feas-tol", type=float, default=1e-8)
    p_ccp.add_argument("--opt-tol", type=float, default=1e-5)
    p_ccp.add_argument("--max-iters", type=int, default=500)
    add_common(p_ccp)
    p_ccp.set_defaults(fn=_cmd_ccp)

    p_ver = sub.add_parser("verify-lemmas",
                           help="exact binomial lemma sweep")
    p_ver.add_argument("--n-max", type=int, default=200)
    p_ver.add_argument("--q-points", type=int, default=50)
    p_ver.add_argument("--t-points", type=int, default=4)
    add_common(p_ver)
    p_ver.set_defaults(fn=_cmd_verify_lemmas)

    p_exp = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    p_exp.add_argument("--kind", required=True,
                       choices=["counterexample", "coverage", "rate",
                                "sampling", "ccp"])
    p_exp.add_argument("--config", required=True, help="JSON config file")
    add_common(p_exp)
    p_exp.set_defaults(fn=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationFailure as err:
        sys.stderr.write(json.dumps(
            {"error": err.category, "message": str(err)}) + "\n")
        return 2
    except ComputationFailure as err:
        sys.stderr.write(json.dumps(
            {"error": err.category, "message": str(err)}) + "\n")
        return 1
    except NPConvexError as err:
        sys.stderr.write(json.dumps(
            {"error": err.category, "message": str(err)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
