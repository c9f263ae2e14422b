"""Command-line experiment runner.

Subcommands:
  simulate   synthetic corruption grids (per-trial + aggregate CSV)
  forecast   load-forecasting pipeline with optional training-data attacks
  trace      single fit with a recorded convergence trace, exported as CSV
  timing     row-count scaling study at a fixed iteration budget
  verify     empirical theory checks, printed as JSON

Every subcommand accepts --config <json file>; command-line flags override
config values.  Parallelism defaults to the ROBUSTFIT_THREADS environment
variable when set.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict

from .bench import ExperimentPlan, export_trace, run_plan, time_scaling_run
from .diagnostics import run_theory_sweep
from .loadcast import (
    AttackSpec,
    ingest_csv,
    run_forecast_experiment,
    synthetic_load_table,
    year_split,
)
from .sarm import SarmConfig, sarm_fit
from .simgen import InvalidSpec, SimSpec, generate
from .tssarm import TssarmConfig, tssarm_fit


def _default_parallel():
    env = os.environ.get("ROBUSTFIT_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _load_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _merged(config, args, keys):
    """Start from config-file values, then apply explicitly set flags."""
    merged = {k: v for k, v in config.items()}
    for key, flag_value in keys.items():
        if flag_value is not None:
            merged[key] = flag_value
    return merged


def _cmd_simulate(args):
    config = _load_config(args.config)
    overrides = {
        "type_id": args.type, "m": args.m, "n": args.n,
        "kappa": args.kappa, "repetitions": args.reps,
        "base_seed": args.seed, "delta_multiplier": args.delta_mult,
        "out_dir": args.out, "parallel": args.parallel,
    }
    if args.p is not None:
        overrides["p_grid"] = tuple(float(v) for v in args.p.split(","))
    if args.methods is not None:
        overrides["methods"] = tuple(args.methods.split(","))
    plan = ExperimentPlan.from_dict(_merged(config, args, overrides))
    trials_path, agg_path = run_plan(plan)
    print(f"wrote {trials_path}")
    print(f"wrote {agg_path}")
    return 0


def _forecast_tables(merged):
    if merged.get("train") and merged.get("test"):
        return ingest_csv(merged["train"]), ingest_csv(merged["test"])
    if merged.get("synthetic", True):
        start_year = int(merged.get("start_year", 2013))
        years = int(merged.get("years", 3))
        table = synthetic_load_table(start_year=start_year, years=years,
                                     seed=int(merged.get("table_seed", 11)))
        return year_split(table, start_year + years - 1)
    raise InvalidSpec("need --train and --test CSVs, or synthetic mode")


def _cmd_forecast(args):
    config = _load_config(args.config)
    merged = _merged(config, args, {
        "train": args.train, "test": args.test,
        "start_year": args.start_year, "years": args.years,
        "methods": args.methods, "out": args.out,
        "attack": args.attack, "fraction": args.fraction,
        "params": args.params, "attack_seed": args.attack_seed,
        "table_seed": args.table_seed,
        "delta_multiplier": args.delta_mult,
    })
    train, test = _forecast_tables(merged)
    attack = None
    if merged.get("attack"):
        params = merged.get("params")
        if isinstance(params, str):
            params = tuple(float(v) for v in params.split(","))
        kwargs = {"kind": merged["attack"],
                  "fraction_k": float(merged.get("fraction", 40.0)),
                  "seed": int(merged.get("attack_seed", 0))}
        if params is not None:
            kwargs["params"] = tuple(params)
        attack = AttackSpec(**kwargs)
    methods = merged.get("methods", "MLR,TSSARM")
    if isinstance(methods, str):
        methods = methods.split(",")
    reports = [run_forecast_experiment(
        train, test, attack=attack, method=method,
        delta_multiplier=float(merged.get("delta_multiplier", 6.0)))
        for method in methods]
    out_dir = merged.get("out", "results")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "mape_report.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "attack", "fraction_k", "mape", "sigma_hat"])
        for rep in reports:
            writer.writerow([
                rep.method, rep.attack_kind or "none",
                attack.fraction_k if attack else 0.0,
                repr(rep.mape),
                "" if rep.sigma_hat is None else repr(rep.sigma_hat)])
    json_path = os.path.join(out_dir, "mape_report.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump([asdict(rep) for rep in reports], fh, indent=2)
    for rep in reports:
        print(f"{rep.method}: MAPE={rep.mape:.3f}%"
              + (f" (sigma_hat={rep.sigma_hat:.2f})" if rep.sigma_hat else ""))
    print(f"wrote {csv_path}")
    return 0


def _cmd_trace(args):
    config = _load_config(args.config)
    merged = _merged(config, args, {
        "type_id": args.type, "m": args.m, "n": args.n, "p": args.p,
        "seed": args.seed, "kappa": args.kappa, "method": args.method,
        "delta_multiplier": args.delta_mult, "out": args.out,
    })
    spec = SimSpec(type_id=merged.get("type_id", "T1"),
                   m=int(merged.get("m", 512)), n=int(merged.get("n", 16)),
                   p=float(merged.get("p", 0.3)),
                   seed=int(merged.get("seed", 0)),
                   kappa=merged.get("kappa"))
    inst = generate(spec)
    delta = float(merged.get("delta_multiplier", 6.0)) * inst.sigma ** 2
    base = SarmConfig(delta=delta, record_trace=True)
    method = merged.get("method", "sarm").lower()
    if method == "tssarm":
        fit = tssarm_fit(inst.X, inst.y, TssarmConfig(base=base))
    else:
        fit = sarm_fit(inst.X, inst.y, base)
    out = merged.get("out", "trace.csv")
    export_trace(fit, out)
    print(f"{method}: {fit.iterations} iterations, converged={fit.converged}")
    print(f"wrote {out}")
    return 0


def _cmd_timing(args):
    config = _load_config(args.config)
    merged = _merged(config, args, {
        "type_id": args.type, "m": args.m, "n": args.n, "p": args.p,
        "seed": args.seed, "iterations": args.iterations, "out": args.out,
        "delta_multiplier": args.delta_mult,
    })
    scales = merged.get("scales", "1,2")
    if args.scales is not None:
        scales = args.scales
    if isinstance(scales, str):
        scales = [float(v) for v in scales.split(",")]
    base = SimSpec(type_id=merged.get("type_id", "T1"),
                   m=int(merged.get("m", 5120)), n=int(merged.get("n", 64)),
                   p=float(merged.get("p", 0.25)),
                   seed=int(merged.get("seed", 0)),
                   kappa=merged.get("kappa"))
    out = merged.get("out", "timing.csv")
    rows = time_scaling_run(
        base, scales, iterations=int(merged.get("iterations", 300)),
        delta_multiplier=float(merged.get("delta_multiplier", 6.0)),
        out_path=out)
    for row in rows:
        print(f"scale={row['scale']} m={row['m']} "
              f"per_iter={row['per_iter_seconds']:.3e}s "
              f"ratio={row['ratio_vs_prev'] or '-'} status={row['status']}")
    print(f"wrote {out}")
    return 0


def _cmd_verify(args):
    report = run_theory_sweep(n_fits=args.fits, seed=args.seed)
    print(report.to_json())
    ok = (report.descent_violations == 0
          and report.zstep_bound_violations == 0
          and report.max_fd_gradient_error <= 1e-5
          and report.prox_oracle_max_gap <= 1e-9)
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="robustfit",
        description="Robust regression benchmarks and load-forecast experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a synthetic corruption grid")
    sim.add_argument("--config", help="JSON plan file")
    sim.add_argument("--type", help="scenario type id (T1..T6)")
    sim.add_argument("--m", type=int)
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", help="comma-separated corruption fractions")
    sim.add_argument("--kappa", type=float)
    sim.add_argument("--methods", help="comma-separated method names")
    sim.add_argument("--reps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--delta-mult", type=float, dest="delta_mult")
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--parallel", type=int, default=None)
    sim.set_defaults(func=_cmd_simulate)

    fc = sub.add_parser("forecast", help="load-forecast experiment")
    fc.add_argument("--config")
    fc.add_argument("--train", help="training CSV (timestamp,load,temperature)")
    fc.add_argument("--test", help="test CSV")
    fc.add_argument("--start-year", type=int, dest="start_year",
                    help="synthetic data start year")
    fc.add_argument("--years", type=int, help="synthetic span; last year is test")
    fc.add_argument("--methods", help="comma-separated: MLR,SARM,TSSARM")
    fc.add_argument("--attack", choices=["PosUniform", "PosGaussian", "NegUniform"])
    fc.add_argument("--fraction", type=float, help="attacked percent of rows")
    fc.add_argument("--params", help="attack params a,b or mu,sigma")
    fc.add_argument("--attack-seed", type=int, dest="attack_seed")
    fc.add_argument("--delta-mult", type=float, dest="delta_mult")
    fc.add_argument("--seed", type=int, dest="table_seed",
                    help="synthetic table seed")
    fc.add_argument("--out")
    fc.set_defaults(func=_cmd_forecast)

    tr = sub.add_parser("trace", help="export one fit's convergence trace")
    tr.add_argument("--config")
    tr.add_argument("--type")
    tr.add_argument("--m", type=int)
    tr.add_argument("--n", type=int)
    tr.add_argument("--p", type=float)
    tr.add_argument("--kappa", type=float)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--method", choices=["sarm", "tssarm"])
    tr.add_argument("--delta-mult", type=float, dest="delta_mult")
    tr.add_argument("--out")
    tr.set_defaults(func=_cmd_trace)

    tm = sub.add_parser("timing", help="per-iteration scaling study")
    tm.add_argument("--config")
    tm.add_argument("--type")
    tm.add_argument("--m", type=int)
    tm.add_argument("--n", type=int)
    tm.add_argument("--p", type=float)
    tm.add_argument("--seed", type=int)
    tm.add_argument("--scales", help="comma-separated row-count multipliers")
    tm.add_argument("--iterations", type=int)
    tm.add_argument("--delta-mult", type=float, dest="delta_mult")
    tm.add_argument("--out")
    tm.set_defaults(func=_cmd_timing)

    vf = sub.add_parser("verify", help="run the empirical theory checks")
    vf.add_argument("--fits", type=int, default=20)
    vf.add_argument("--seed", type=int, default=0)
    vf.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "parallel", None) is None and args.command == "simulate":
        args.parallel = _default_parallel()
    try:
        return args.func(args)
    except (InvalidSpec, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
