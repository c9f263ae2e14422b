"""Monte Carlo experiment engine behind the CLI.

A plan expands into (corruption level, trial) cells; each cell generates
one instance (seed = base_seed + global trial index) and fits every
requested method on it, so all methods see identical data.  Per-trial rows
are sorted before writing and deliberately exclude wall time, making the
per-trial CSV byte-reproducible across runs and parallelism degrees; timing
lives in the aggregate file.
"""

import csv
import json
import os
import time
from dataclasses import asdict, dataclass
from multiprocessing import Pool
from typing import Optional, Sequence

import numpy as np

from . import baselines
from .sarm import SarmConfig, sarm_fit
from .simgen import InvalidSpec, SimSpec, generate, relative_l2_error
from .tssarm import TssarmConfig, tssarm_fit

SIM_METHODS = ("SARM", "TSSARM", "OLS", "MLR", "IRLS", "LAD", "TLRM",
               "AROSI", "IPOD", "GARD", "Oracle", "Ideal")


class NoTrace(ValueError):
    """The fit was run without record_trace; nothing to export."""


@dataclass
class ExperimentPlan:
    """A synthetic benchmark grid.

    Trial seeds are base_seed + trial_index, where trial_index enumerates
    (p value, repetition) cells as p_index * repetitions + rep; the seed is
    bound to the cell, never to the worker executing it.
    """

    type_id: str = "T1"
    m: int = 512
    n: int = 16
    p_grid: Sequence[float] = (0.3,)
    kappa: Optional[float] = None
    methods: Sequence[str] = ("SARM", "OLS")
    repetitions: int = 200
    base_seed: int = 0
    delta_multiplier: float = 6.0
    out_dir: str = "results"
    parallel: int = 1
    write_json: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise InvalidSpec(f"repetitions must be >= 1, got {self.repetitions}")
        if self.parallel < 1:
            raise InvalidSpec(f"parallel must be >= 1, got {self.parallel}")
        if not self.p_grid:
            raise InvalidSpec("p_grid must be nonempty")
        for method in self.methods:
            if method not in SIM_METHODS:
                raise InvalidSpec(f"unknown method {method!r}")
        # constructing a spec validates type/shape/kappa coherence
        SimSpec(type_id=self.type_id, m=self.m, n=self.n,
                p=float(self.p_grid[0]), seed=0, kappa=self.kappa)

    def to_json(self):
        d = asdict(self)
        d["p_grid"] = list(self.p_grid)
        d["methods"] = list(self.methods)
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise InvalidSpec(f"unknown plan fields: {sorted(unknown)}")
        d = dict(d)
        if "p_grid" in d:
            d["p_grid"] = tuple(float(v) for v in d["p_grid"])
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        return cls(**d)


@dataclass
class TrialResult:
    """One (instance, method) outcome."""

    method: str
    type_id: str
    m: int
    n: int
    p: float
    kappa: Optional[float]
    seed: int
    trial: int
    error: float
    wall_time: float
    iterations: int
    converged: bool


def fit_method(method, inst, delta_multiplier=6.0):
    """Fit one method on a generated instance.

    Returns (w_hat, iterations, converged); iterations is 0 for the
    closed-form and library-iteration baselines that do not expose a count.
    """
    delta = delta_multiplier * inst.sigma ** 2
    cfg = baselines.BaselineConfig(sigma=inst.sigma)
    if method == "SARM":
        fit = sarm_fit(inst.X, inst.y, SarmConfig(delta=delta))
        return fit.w_hat, fit.iterations, fit.converged
    if method == "TSSARM":
        fit = tssarm_fit(inst.X, inst.y, TssarmConfig(base=SarmConfig(delta=delta)))
        return fit.w_hat, fit.iterations, fit.converged
    if method in ("OLS", "MLR"):
        return baselines.fit_ols(inst.X, inst.y), 0, True
    if method == "IRLS":
        return baselines.fit_irls_bisquare(inst.X, inst.y, cfg), 0, True
    if method == "LAD":
        return baselines.fit_lad(inst.X, inst.y, cfg), 0, True
    if method == "TLRM":
        w, _ = baselines.fit_trlm(inst.X, inst.y, cfg)
        return w, 0, True
    if method == "AROSI":
        w, _ = baselines.fit_arosi(inst.X, inst.y, cfg)
        return w, 0, True
    if method == "IPOD":
        w, _ = baselines.fit_ipod(inst.X, inst.y, cfg)
        return w, 0, True
    if method == "GARD":
        w, _, terminated = baselines.fit_gard(inst.X, inst.y, cfg)
        return w, 0, terminated
    if method == "Oracle":
        return baselines.fit_oracle(inst.X, inst.y, inst.support), 0, True
    if method == "Ideal":
        return baselines.fit_ideal(inst.X, inst.y, inst.z_true), 0, True
    raise InvalidSpec(f"unknown method {method!r}")


def _run_cell(args):
    plan_dict, p, trial, trial_index = args
    plan = ExperimentPlan.from_dict(plan_dict)
    seed = plan.base_seed + trial_index
    spec = SimSpec(type_id=plan.type_id, m=plan.m, n=plan.n, p=p,
                   seed=seed, kappa=plan.kappa)
    inst = generate(spec)
    rows = []
    for method in plan.methods:
        t0 = time.perf_counter()
        try:
            w_hat, iterations, converged = fit_method(
                method, inst, plan.delta_multiplier)
            error = relative_l2_error(w_hat, inst.w_true)
        except Exception:
            error, iterations, converged = float("nan"), 0, False
        rows.append(TrialResult(
            method=method, type_id=plan.type_id, m=plan.m, n=plan.n,
            p=p, kappa=plan.kappa, seed=seed, trial=trial, error=error,
            wall_time=time.perf_counter() - t0, iterations=iterations,
            converged=converged))
    return rows


TRIAL_COLUMNS = ("type_id", "m", "n", "p", "kappa", "method", "trial",
                 "seed", "error", "iterations", "converged")


def _trial_row(r):
    return (r.type_id, str(r.m), str(r.n), repr(float(r.p)),
            "" if r.kappa is None else repr(float(r.kappa)), r.method,
            str(r.trial), str(r.seed), repr(float(r.error)),
            str(r.iterations), str(int(r.converged)))


def run_plan(plan):
    """Execute every (p, trial, method) cell and write the report files.

    Returns (per-trial CSV path, aggregate CSV path).  Failures inside a
    single trial are recorded as error=nan rows, not raised.
    """
    os.makedirs(plan.out_dir, exist_ok=True)
    plan_dict = json.loads(plan.to_json())
    cells = []
    for p_index, p in enumerate(plan.p_grid):
        for rep in range(plan.repetitions):
            cells.append((plan_dict, float(p), rep,
                          p_index * plan.repetitions + rep))
    if plan.parallel > 1:
        with Pool(processes=plan.parallel) as pool:
            nested = pool.map(_run_cell, cells)
    else:
        nested = [_run_cell(cell) for cell in cells]
    results = [r for rows in nested for r in rows]
    results.sort(key=lambda r: (r.p, r.trial, r.method))

    trials_path = os.path.join(plan.out_dir, "trials.csv")
    with open(trials_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_COLUMNS)
        for r in results:
            writer.writerow(_trial_row(r))

    agg_path = os.path.join(plan.out_dir, "aggregate.csv")
    with open(agg_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["type_id", "m", "n", "p", "method", "reps",
                         "mean_error", "std_error", "mean_iterations",
                         "mean_wall_time", "failures"])
        for p in plan.p_grid:
            for method in plan.methods:
                group = [r for r in results
                         if r.p == float(p) and r.method == method]
                errs = np.array([r.error for r in group])
                ok = np.isfinite(errs)
                writer.writerow([
                    plan.type_id, plan.m, plan.n, repr(float(p)), method,
                    len(group),
                    repr(float(np.mean(errs[ok]))) if np.any(ok) else "nan",
                    repr(float(np.std(errs[ok]))) if np.any(ok) else "nan",
                    repr(float(np.mean([r.iterations for r in group]))),
                    repr(float(np.mean([r.wall_time for r in group]))),
                    int(np.sum(~ok)),
                ])
    if plan.write_json:
        json_path = os.path.join(plan.out_dir, "trials.json")
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump([asdict(r) for r in results], fh, indent=2)
    return trials_path, agg_path


def export_trace(fit, path):
    """Write a recorded trace as CSV: k, H, H_decrement, w_step, z_step,
    grad_norm.  The decrement on the first row is measured against the
    starting objective."""
    if fit.trace is None:
        raise NoTrace("fit was run without record_trace")
    tr = fit.trace
    H = np.asarray(tr.objective_values, dtype=float)
    prev = np.concatenate([[tr.initial_objective], H[:-1]])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "H", "H_decrement", "w_step", "z_step", "grad_norm"])
        for k in range(H.shape[0]):
            writer.writerow([k + 1, repr(float(H[k])),
                             repr(float(prev[k] - H[k])),
                             repr(float(tr.w_step_norms[k])),
                             repr(float(tr.z_step_norms[k])),
                             repr(float(tr.grad_norms[k]))])
    return path


def time_scaling_run(base_spec, scales, iterations=300, delta_multiplier=6.0,
                     out_path=None):
    """Time the solver at several row counts with the column count fixed.

    Each scale multiplies the base row count; the solver runs a fixed
    iteration budget so per-iteration time is measured on equal work.
    Returns a list of row dicts (scale, m, iterations, wall_time,
    per_iter_seconds, ratio_vs_prev, status); scales that fail to allocate
    produce an error row instead of raising.
    """
    rows = []
    prev_per_iter = None
    for scale in scales:
        m = int(round(base_spec.m * scale))
        row = {"scale": scale, "m": m, "n": base_spec.n,
               "iterations": 0, "wall_time": float("nan"),
               "per_iter_seconds": float("nan"), "ratio_vs_prev": "",
               "status": "ok"}
        try:
            spec = SimSpec(type_id=base_spec.type_id, m=m, n=base_spec.n,
                           p=base_spec.p, seed=base_spec.seed,
                           kappa=base_spec.kappa)
            inst = generate(spec)
            cfg = SarmConfig(delta=delta_multiplier * inst.sigma ** 2,
                             tol=1e-300, max_iter=iterations)
            fit = sarm_fit(inst.X, inst.y, cfg)
            per_iter = fit.wall_time / max(fit.iterations, 1)
            row.update(iterations=fit.iterations, wall_time=fit.wall_time,
                       per_iter_seconds=per_iter)
            if prev_per_iter is not None:
                row["ratio_vs_prev"] = repr(per_iter / prev_per_iter)
            prev_per_iter = per_iter
        except MemoryError:
            row["status"] = "error: allocation failed"
            prev_per_iter = None
        rows.append(row)
    if out_path is not None:
        with open(out_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    return rows
