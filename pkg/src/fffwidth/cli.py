"""Command-line interface.

Subcommands: generate, fit-direct, fit-transfer, predict, grid-search,
benchmark. A JSON config file may supply any long-option value (keys use
underscores); explicit flags override the file. Exit codes: 0 success,
2 usage/config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import secrets
import sys

import numpy as np

from . import sourcegen
from .data import concat, load_csv, save_csv
from .errors import ConfigError, DataError, FffWidthError, NumericalError
from .protocol import (
    SearchConfig,
    DEFAULT_SUBGRID_SIZES,
    curve_to_csv,
    default_n_grid,
    direct_learning_curve,
    find_n_direct,
    report_to_json,
    select_n_t,
    sweep_to_csv,
    transfer_sweep,
)
from .svr import SvrModel, SvrParams, fit_weighted_svr, grid_search_cv
from .transfer import TransferConfig, TransferEnsemble, fit_tradaboost_r2


def log(**kv):
    print(" ".join(f"{k}={v}" for k, v in kv.items()), flush=True)


def _resolve_seed(seed):
    if seed is None:
        seed = secrets.randbelow(2**31)
    log(seed=seed)
    return int(seed)


def _apply_config_file(args: argparse.Namespace) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            overrides = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config file {args.config}: {err}") from err
    for key, value in overrides.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _svr_params_from_args(args) -> SvrParams | None:
    given = [args.c, args.gamma, args.epsilon]
    if all(v is None for v in given):
        return None
    if any(v is None for v in given):
        raise ConfigError("--c, --gamma and --epsilon must be given together")
    return SvrParams(c=args.c, epsilon=args.epsilon, gamma=args.gamma)


def _write_model(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def _read_model(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("kind") == "svr":
        return SvrModel.from_dict(d)
    if d.get("kind") == "transfer":
        return TransferEnsemble.from_dict(d)
    raise DataError(f"unrecognized model kind in {path}")


def cmd_generate(args) -> int:
    seed = _resolve_seed(args.seed)
    h = args.h
    if h is None:
        raise ConfigError("--h is required")
    f_range = (args.f_min, args.f_max)
    s_range = (args.s_min, args.s_max)
    cfg_src = sourcegen.SourceModelConfig(h=h, filament_diameter=args.diameter)
    if args.kind == "source":
        data = sourcegen.generate_source_grid(f_range, s_range, args.n_f, args.n_s, cfg_src)
    else:
        base = sourcegen.default_synthetic_config(h, seed=seed)
        cfg_syn = sourcegen.SyntheticTargetConfig(
            alpha=base.alpha if args.alpha is None else args.alpha,
            p=base.p if args.p is None else args.p,
            offset=base.offset if args.offset is None else args.offset,
            noise_std=base.noise_std if args.noise_std is None else args.noise_std,
            stability_band=(args.band_lo, args.band_hi),
            seed=seed,
        )
        data = sourcegen.generate_synthetic_target(f_range, s_range, args.n_f, args.n_s,
                                                   cfg_src, cfg_syn)
    save_csv(data, args.out)
    log(command="generate", kind=args.kind, rows=len(data), out=args.out)
    return 0


def cmd_fit_direct(args) -> int:
    seed = _resolve_seed(args.seed)
    train = load_csv(args.train)
    params = _svr_params_from_args(args)
    if params is None:
        params = grid_search_cv(train, None, SearchConfig().grid,
                                k_folds=min(5, len(train)), seed=seed)
        log(stage="grid_search", c=params.c, gamma=params.gamma, epsilon=params.epsilon)
    model = fit_weighted_svr(train, None, params)
    _write_model(model.to_dict(), args.out)
    log(command="fit-direct", n_train=len(train), out=args.out)
    return 0


def cmd_fit_transfer(args) -> int:
    seed = _resolve_seed(args.seed)
    source = load_csv(args.source, origin="source")
    target = load_csv(args.target, origin="target")
    params = _svr_params_from_args(args)
    if params is None:
        union = concat(source, target)
        params = grid_search_cv(union, None, SearchConfig().grid,
                                k_folds=min(5, len(union)), seed=seed)
        log(stage="grid_search", c=params.c, gamma=params.gamma, epsilon=params.epsilon)
    config = TransferConfig(svr_params=params, n_iterations=args.iterations)
    ensemble = fit_tradaboost_r2(source, target, config, seed=seed)
    _write_model(ensemble.to_dict(), args.out)
    log(command="fit-transfer", n_source=len(source), n_target=len(target),
        rounds=len(ensemble.models), out=args.out)
    return 0


def cmd_predict(args) -> int:
    model = _read_model(args.model)
    with open(args.data, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for col in ("F_mm_per_min", "S_mm_per_min"):
            if col not in fields:
                raise DataError(f"prediction input misses column {col!r}")
        rows = list(reader)
    f = np.array([float(r["F_mm_per_min"]) for r in rows])
    s = np.array([float(r["S_mm_per_min"]) for r in rows])
    preds = model.predict_many(f, s)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["F_mm_per_min", "S_mm_per_min", "W_pred_mm"])
        for fi, si, wi in zip(f, s, preds):
            writer.writerow([repr(float(fi)), repr(float(si)), repr(float(wi))])
    log(command="predict", rows=len(rows), out=args.out)
    return 0


def cmd_grid_search(args) -> int:
    seed = _resolve_seed(args.seed)
    train = load_csv(args.train)
    params = grid_search_cv(train, None, SearchConfig().grid,
                            k_folds=min(args.k_folds, len(train)), seed=seed)
    payload = params.to_dict()
    print(json.dumps(payload, sort_keys=True))
    if args.out:
        _write_model(payload, args.out)
    return 0


def _parse_cells(spec: str):
    cells = []
    for token in spec.split(","):
        ns, _, nf = token.strip().partition("x")
        cells.append((int(ns), int(nf)))
    return cells


def cmd_benchmark(args) -> int:
    seed = _resolve_seed(args.seed)
    source_pool = load_csv(args.source, origin="source")
    target = load_csv(args.target, origin="target")
    n_grid = ([int(v) for v in args.n_grid.split(",")] if args.n_grid
              else default_n_grid(len(target)))
    cells = _parse_cells(args.cells) if args.cells else DEFAULT_SUBGRID_SIZES
    search = SearchConfig()
    log(stage="curve", n_points=len(n_grid), reps=args.reps)
    curve = direct_learning_curve(target, n_grid, args.reps, search, seed,
                                  n_jobs=args.jobs)
    baseline = find_n_direct(curve, rel_tol=args.plateau_tol)
    log(stage="baseline", n_direct=baseline.n_direct,
        rmse_direct=f"{baseline.rmse_mean:.6f}", plateau=baseline.plateau_found)
    test_size = args.test_size if args.test_size else baseline.n_direct
    max_cell = max(c[0] * c[1] for c in cells)
    test_size = min(test_size, len(target) - max_cell)
    config = None
    params = _svr_params_from_args(args)
    if params is not None:
        config = TransferConfig(svr_params=params, n_iterations=args.iterations)
    sweep = transfer_sweep(source_pool, target, baseline, cells, args.eval_reps,
                           test_size, config, seed, search=search, n_jobs=args.jobs)
    report = select_n_t(sweep)
    os.makedirs(args.out_dir, exist_ok=True)
    curve_to_csv(curve, os.path.join(args.out_dir, "curve.csv"))
    sweep_to_csv(sweep, os.path.join(args.out_dir, "sweep.csv"))
    report_to_json(report, os.path.join(args.out_dir, "report.json"))
    log(command="benchmark", achieved=report.achieved, n_t=report.n_t_total,
        rmse_t=f"{report.rmse_t_mean:.6f}",
        sample_reduction_pct=f"{report.sample_reduction_pct:.1f}",
        out_dir=args.out_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fffwidth")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("generate", help="emit a source or synthetic-target CSV")
    common(p)
    p.add_argument("kind", choices=["source", "synthetic-target"])
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--f-min", type=float, default=sourcegen.DEFAULT_F_RANGE[0])
    p.add_argument("--f-max", type=float, default=sourcegen.DEFAULT_F_RANGE[1])
    p.add_argument("--s-min", type=float, default=sourcegen.DEFAULT_S_RANGE[0])
    p.add_argument("--s-max", type=float, default=sourcegen.DEFAULT_S_RANGE[1])
    p.add_argument("--n-f", type=int, default=sourcegen.DEFAULT_GRID_N)
    p.add_argument("--n-s", type=int, default=sourcegen.DEFAULT_GRID_N)
    p.add_argument("--diameter", type=float, default=sourcegen.DEFAULT_FILAMENT_DIAMETER)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--offset", type=float, default=None)
    p.add_argument("--noise-std", type=float, default=None)
    p.add_argument("--band-lo", type=float, default=sourcegen.DEFAULT_STABILITY_BAND[0])
    p.add_argument("--band-hi", type=float, default=sourcegen.DEFAULT_STABILITY_BAND[1])
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit-direct", help="fit an SVR on a target CSV")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=cmd_fit_direct)

    p = sub.add_parser("fit-transfer", help="fit a TrAdaBoost.R2 ensemble")
    common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=30)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=cmd_fit_transfer)

    p = sub.add_parser("predict", help="predict widths with a serialized model")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("grid-search", help="brute-force hyperparameter search")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--k-folds", type=int, default=5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("benchmark", help="full direct-vs-transfer protocol")
    common(p)
    p.add_argument("--source", required=True, help="source pool CSV")
    p.add_argument("--target", required=True, help="target CSV")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--eval-reps", type=int, default=30)
    p.add_argument("--n-grid", default=None, help="comma-separated training sizes")
    p.add_argument("--cells", default=None, help="sub-grids as NSxNF pairs, e.g. 2x2,3x3")
    p.add_argument("--test-size", type=int, default=None)
    p.add_argument("--plateau-tol", type=float, default=0.01)
    p.add_argument("--iterations", type=int, default=30)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config_file(args)
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (DataError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except NumericalError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except FffWidthError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
