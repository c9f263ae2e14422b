"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Shared Monte Carlo cells are computed once in session fixtures; the solver
traces they collect feed the descent/step-bound criterion.  Two criteria
fail at their stated thresholds on this implementation; the tests state
the thresholds faithfully and the assertion messages carry the measured
values and the mechanism.  Everything here runs from fixed seeds.
"""

import time

import numpy as np
import pytest

from robustfit.baselines import (
    BaselineConfig,
    fit_arosi,
    fit_gard,
    fit_ipod,
    fit_irls_bisquare,
    fit_lad,
    fit_ols,
    fit_oracle,
    fit_trlm,
)
from robustfit.bench import ExperimentPlan, run_plan, time_scaling_run
from robustfit.diagnostics import (
    check_descent,
    check_zstep_bound,
    fd_gradient,
    prox_grid_argmin,
    prox_grid_gap,
)
from robustfit.loadcast import (
    AttackSpec,
    run_forecast_experiment,
    synthetic_load_table,
    year_split,
)
from robustfit.sarm import SarmConfig, grad_w, precondition, prox_z, sarm_fit
from robustfit.simgen import SimSpec, generate, relative_l2_error
from robustfit.tssarm import TssarmConfig, tssarm_fit


def _sarm(inst, mult=6.0, trace=False):
    cfg = SarmConfig(delta=mult * inst.sigma ** 2, record_trace=trace)
    return sarm_fit(inst.X, inst.y, cfg)


def _tssarm(inst, mult=6.0, trace=False):
    cfg = TssarmConfig(base=SarmConfig(delta=mult * inst.sigma ** 2,
                                       record_trace=trace))
    return tssarm_fit(inst.X, inst.y, cfg)


@pytest.fixture(scope="session")
def crit1_runs():
    t0 = time.perf_counter()
    gaps = {k: [] for k in ("SARM", "TSSARM", "IRLS", "TLRM", "AROSI", "IPOD")}
    traces = []
    for rep in range(20):
        inst = generate(SimSpec(type_id="T1", m=512, n=16, p=0.0, seed=rep))
        cfg = BaselineConfig(sigma=inst.sigma)
        w_ols = fit_ols(inst.X, inst.y)
        sarm = _sarm(inst, trace=True)
        tss = _tssarm(inst, trace=True)
        traces += [sarm.trace, tss.trace]
        hats = {
            "SARM": sarm.w_hat,
            "TSSARM": tss.w_hat,
            "IRLS": fit_irls_bisquare(inst.X, inst.y, cfg),
            "TLRM": fit_trlm(inst.X, inst.y, cfg)[0],
            "AROSI": fit_arosi(inst.X, inst.y, cfg)[0],
            "IPOD": fit_ipod(inst.X, inst.y, cfg)[0],
        }
        for name, w in hats.items():
            gaps[name].append(relative_l2_error(w, w_ols))
    return {"gaps": {k: max(v) for k, v in gaps.items()},
            "traces": traces, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def crit2_runs():
    t0 = time.perf_counter()
    errors = {"SARM": [], "OLS": [], "AROSI": []}
    traces = []
    for rep in range(50):
        inst = generate(SimSpec(type_id="T1", m=512, n=16, p=0.3, seed=rep))
        fit = _sarm(inst, trace=True)
        traces.append(fit.trace)
        errors["SARM"].append(relative_l2_error(fit.w_hat, inst.w_true))
        errors["OLS"].append(relative_l2_error(fit_ols(inst.X, inst.y),
                                               inst.w_true))
        cfg = BaselineConfig(sigma=inst.sigma)
        errors["AROSI"].append(relative_l2_error(
            fit_arosi(inst.X, inst.y, cfg)[0], inst.w_true))
    return {"means": {k: float(np.mean(v)) for k, v in errors.items()},
            "traces": traces, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def crit3_runs():
    t0 = time.perf_counter()
    errors = {"SARM": [], "TLRM": []}
    traces = []
    for rep in range(50):
        inst = generate(SimSpec(type_id="T1", m=512, n=16, p=0.45, seed=rep))
        fit = _sarm(inst, trace=True)
        traces.append(fit.trace)
        errors["SARM"].append(relative_l2_error(fit.w_hat, inst.w_true))
        cfg = BaselineConfig(sigma=inst.sigma)
        errors["TLRM"].append(relative_l2_error(
            fit_trlm(inst.X, inst.y, cfg)[0], inst.w_true))
    return {"means": {k: float(np.mean(v)) for k, v in errors.items()},
            "traces": traces, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def crit4_runs():
    t0 = time.perf_counter()
    errors = {k: [] for k in ("SARM", "Oracle", "OLS", "IRLS", "LAD",
                              "TLRM", "AROSI", "IPOD", "GARD")}
    traces = []
    for rep in range(50):
        inst = generate(SimSpec(type_id="T2", m=512, n=50, p=0.3, seed=rep))
        cfg = BaselineConfig(sigma=inst.sigma)
        fit = _sarm(inst, trace=True)
        traces.append(fit.trace)
        hats = {
            "SARM": fit.w_hat,
            "Oracle": fit_oracle(inst.X, inst.y, inst.support),
            "OLS": fit_ols(inst.X, inst.y),
            "IRLS": fit_irls_bisquare(inst.X, inst.y, cfg),
            "LAD": fit_lad(inst.X, inst.y, cfg),
            "TLRM": fit_trlm(inst.X, inst.y, cfg)[0],
            "AROSI": fit_arosi(inst.X, inst.y, cfg)[0],
            "IPOD": fit_ipod(inst.X, inst.y, cfg)[0],
            "GARD": fit_gard(inst.X, inst.y, cfg)[0],
        }
        for name, w in hats.items():
            errors[name].append(relative_l2_error(w, inst.w_true))
    return {"means": {k: float(np.mean(v)) for k, v in errors.items()},
            "traces": traces, "elapsed": time.perf_counter() - t0}


def test_criterion_01_clean_data_equivalence(crit1_runs, acceptance):
    gaps = crit1_runs["gaps"]
    dt = crit1_runs["elapsed"]
    worst = max(gaps.values())
    two_pct_ok = worst <= 0.02
    sarm_ok = gaps["SARM"] <= 1e-6
    ok = two_pct_ok and sarm_ok and dt < 10
    acceptance.record(1, ok, (
        f"all methods within 2% of OLS (worst gap {worst:.2e}): "
        f"{'ok' if two_pct_ok else 'FAIL'}; SARM gap {gaps['SARM']:.2e} "
        f"vs 1e-6: {'ok' if sarm_ok else 'FAIL'}; {dt:.1f}s"))
    assert two_pct_ok, f"worst relative gap to OLS {worst:.3e} > 0.02"
    assert dt < 10, f"elapsed {dt:.1f}s >= 10s"
    assert sarm_ok, (
        f"SARM-OLS max relative gap {gaps['SARM']:.3e} exceeds 1e-6: on "
        f"clean data the z-update still zeroes a ~1% share of residuals "
        f"whose magnitude crosses sqrt(delta) = sqrt(6)*sigma, so the fit "
        f"is near OLS but not identical to it at 1e-6 resolution")


def test_criterion_02_moderate_corruption_ordering(crit2_runs, acceptance):
    means = crit2_runs["means"]
    dt = crit2_runs["elapsed"]
    level_ok = means["SARM"] <= 0.15
    ols_ok = means["OLS"] >= 5 * means["SARM"]
    arosi_ok = means["SARM"] <= 1.5 * means["AROSI"]
    ok = level_ok and ols_ok and arosi_ok and dt < 300
    acceptance.record(2, ok, (
        f"SARM {means['SARM']:.4f} <= 0.15; OLS/SARM "
        f"{means['OLS'] / means['SARM']:.2f} >= 5; SARM/AROSI "
        f"{means['SARM'] / means['AROSI']:.2f} <= 1.5; {dt:.0f}s"))
    assert level_ok, f"SARM mean error {means['SARM']:.4f} > 0.15"
    assert ols_ok, f"OLS {means['OLS']:.4f} < 5x SARM {means['SARM']:.4f}"
    assert arosi_ok, (
        f"SARM {means['SARM']:.4f} > 1.5x AROSI {means['AROSI']:.4f}")
    assert dt < 300, f"elapsed {dt:.0f}s >= 5min"


def test_criterion_03_breakdown_separation(crit3_runs, acceptance):
    means = crit3_runs["means"]
    dt = crit3_runs["elapsed"]
    ratio = means["TLRM"] / means["SARM"]
    level_ok = means["SARM"] <= 0.5
    sep_ok = ratio >= 2.0
    ok = level_ok and sep_ok and dt < 300
    acceptance.record(3, ok, (
        f"SARM {means['SARM']:.4f} <= 0.5: {'ok' if level_ok else 'FAIL'}; "
        f"TLRM/SARM {ratio:.2f} vs required >= 2: "
        f"{'ok' if sep_ok else 'FAIL'}; {dt:.0f}s"))
    assert level_ok, f"SARM mean error {means['SARM']:.4f} > 0.5"
    assert dt < 300, f"elapsed {dt:.0f}s >= 5min"
    assert sep_ok, (
        f"TLRM mean error {means['TLRM']:.4f} is only {ratio:.2f}x SARM "
        f"{means['SARM']:.4f}, under the required 2x: the corruption here "
        f"is symmetric two-sided, so the OLS start stays near the truth "
        f"and the 5-sigma residual cut keeps identifying outliers at "
        f"p=0.45; TLRM degrades gradually instead of breaking down")


def test_criterion_04_point_mass_scenario(crit4_runs, acceptance):
    means = crit4_runs["means"]
    dt = crit4_runs["elapsed"]
    sarm = means["SARM"]
    oracle_ok = sarm <= 1.5 * means["Oracle"]
    non_oracle = ("OLS", "IRLS", "LAD", "TLRM", "AROSI", "IPOD", "GARD")
    tightest = min(non_oracle, key=lambda k: means[k])
    baselines_ok = all(sarm <= 1.1 * means[k] for k in non_oracle)
    ok = oracle_ok and baselines_ok and dt < 600
    acceptance.record(4, ok, (
        f"SARM {sarm:.4f} <= 1.5x Oracle {1.5 * means['Oracle']:.4f}; "
        f"<= 1.1x every baseline (tightest {tightest} "
        f"{1.1 * means[tightest]:.4f}); {dt:.0f}s"))
    assert oracle_ok, (
        f"SARM {sarm:.4f} > 1.5x Oracle {1.5 * means['Oracle']:.4f}")
    for k in non_oracle:
        assert sarm <= 1.1 * means[k], (
            f"SARM {sarm:.4f} > 1.1x {k} {1.1 * means[k]:.4f}")
    assert dt < 600, f"elapsed {dt:.0f}s >= 10min"


def test_criterion_05_descent_and_step_bounds(crit1_runs, crit2_runs,
                                              crit3_runs, crit4_runs,
                                              acceptance):
    traces = (crit1_runs["traces"] + crit2_runs["traces"]
              + crit3_runs["traces"] + crit4_runs["traces"])
    descent = sum(check_descent(tr) for tr in traces)
    zstep = sum(check_zstep_bound(trace=tr) for tr in traces)
    ok = descent == 0 and zstep == 0
    acceptance.record(5, ok, (
        f"{len(traces)} solver traces: {descent} descent violations, "
        f"{zstep} z-step bound violations"))
    assert descent == 0, f"{descent} objective increases across traces"
    assert zstep == 0, f"{zstep} z-step bound violations across traces"


def test_criterion_06_prox_oracle(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    worst_gap = 0.0
    worst_val = 0.0
    for _ in range(10000):
        r = float(rng.normal(0.0, 5.0))
        delta = float(rng.uniform(0.01, 10.0))
        worst_gap = max(worst_gap, prox_grid_gap(r, delta))
        worst_val = max(worst_val,
                        abs(prox_grid_argmin(r, delta) - prox_z(r, delta)))
    dt = time.perf_counter() - t0
    ok = worst_gap <= 1e-9 and worst_val <= 1e-6 and dt < 30
    acceptance.record(6, ok, (
        f"10000 pairs: max objective gap vs grid {worst_gap:.1e} <= 1e-9; "
        f"max argmin difference {worst_val:.1e} <= 1e-6; {dt:.1f}s"))
    assert worst_gap <= 1e-9, f"prox worse than grid by {worst_gap:.2e}"
    assert worst_val <= 1e-6, f"argmin mismatch {worst_val:.2e}"
    assert dt < 30, f"elapsed {dt:.1f}s >= 30s"


def test_criterion_07_gradient_check(acceptance):
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(8, 51))
        n = int(rng.integers(1, 9))
        X = rng.standard_normal((m, n))
        y = 2.0 * rng.standard_normal(m)
        w = rng.standard_normal(n)
        z = rng.standard_normal(m) * (rng.random(m) < 0.3)
        delta = float(rng.uniform(0.05, 5.0))
        g = grad_w(X, y, w, z, delta)
        fd = fd_gradient(X, y, w, z, delta)
        err = float(np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1.0))
        worst = max(worst, err)
    ok = worst <= 1e-5
    acceptance.record(7, ok, (
        f"100 instances: max relative error vs central differences "
        f"{worst:.2e} <= 1e-5"))
    assert ok, f"gradient mismatch {worst:.2e} > 1e-5"


def test_criterion_08_preconditioning(acceptance):
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 51))
        m = int(rng.integers(2 * n, 201))
        X = rng.standard_normal((m, n))
        Xp, _ = precondition(X)
        worst = max(worst, float(np.max(np.abs(Xp.T @ Xp - np.eye(n)))))
    ok = worst <= 1e-8
    acceptance.record(8, ok, (
        f"100 designs: max orthonormality defect {worst:.2e} <= 1e-8"))
    assert ok, f"orthonormality defect {worst:.2e} > 1e-8"


def test_criterion_09_two_stage_degeneracy_and_gain(acceptance):
    t0 = time.perf_counter()
    diff = 0.0
    for seed in range(100, 105):
        inst = generate(SimSpec(type_id="T1", m=512, n=16, p=0.3, seed=seed))
        a = _sarm(inst)
        b = _tssarm(inst)
        diff = max(diff, float(np.max(np.abs(a.w_hat - b.w_hat))))
    degenerate_ok = diff <= 1e-10

    errors = {"SARM": [], "TSSARM": []}
    for rep in range(50):
        inst = generate(SimSpec(type_id="T6", m=512, n=64, p=0.35, seed=rep))
        errors["SARM"].append(relative_l2_error(_sarm(inst).w_hat,
                                                inst.w_true))
        errors["TSSARM"].append(relative_l2_error(_tssarm(inst).w_hat,
                                                  inst.w_true))
    m_sarm = float(np.mean(errors["SARM"]))
    m_tss = float(np.mean(errors["TSSARM"]))
    gain_ok = m_tss <= m_sarm
    dt = time.perf_counter() - t0
    ok = degenerate_ok and gain_ok and dt < 600
    acceptance.record(9, ok, (
        f"(a) max |tssarm - sarm| {diff:.1e} <= 1e-10; (b) ill-conditioned "
        f"TSSARM {m_tss:.4f} <= SARM {m_sarm:.4f}; {dt:.0f}s"))
    assert degenerate_ok, f"well-conditioned divergence {diff:.2e} > 1e-10"
    assert gain_ok, f"TSSARM {m_tss:.5f} > SARM {m_sarm:.5f}"
    assert dt < 600, f"elapsed {dt:.0f}s >= 10min"


def test_criterion_10_delta_sensitivity(acceptance):
    means = {}
    for mult in (3.0, 6.0, 10.0):
        errs = []
        for rep in range(30):
            inst = generate(SimSpec(type_id="T1", m=512, n=64, p=0.25,
                                    seed=rep))
            errs.append(relative_l2_error(_sarm(inst, mult=mult).w_hat,
                                          inst.w_true))
        means[mult] = float(np.mean(errs))
    spread = max(means[3.0], means[6.0]) / min(means[3.0], means[6.0])
    stable_ok = spread <= 1.25
    worse_ok = means[10.0] > means[6.0]
    ok = stable_ok and worse_ok
    acceptance.record(10, ok, (
        f"3 vs 6 sigma^2 spread {spread:.3f} <= 1.25; 10 sigma^2 "
        f"{means[10.0]:.4f} > 6 sigma^2 {means[6.0]:.4f}"))
    assert stable_ok, (
        f"errors at 3 and 6 sigma^2 differ by {spread:.3f}x > 1.25x "
        f"({means[3.0]:.4f} vs {means[6.0]:.4f})")
    assert worse_ok, (
        f"10 sigma^2 error {means[10.0]:.4f} not worse than 6 sigma^2 "
        f"{means[6.0]:.4f}")


def test_criterion_11_per_iteration_scaling(acceptance):
    base = SimSpec(type_id="T1", m=5120, n=64, p=0.25, seed=0)
    # min over repeats rejects scheduler noise; fits are identical re-runs
    best = [np.inf, np.inf]
    for _ in range(5):
        rows = time_scaling_run(base, scales=[1.0, 2.0], iterations=300)
        assert all(r["status"] == "ok" for r in rows)
        for i in range(2):
            best[i] = min(best[i], rows[i]["per_iter_seconds"])
    ratio = best[1] / best[0]
    ok = 1.5 <= ratio <= 3.0
    acceptance.record(11, ok, (
        f"per-iteration time ratio m=10240 vs m=5120: {ratio:.2f} "
        f"in [1.5, 3.0]"))
    assert ok, f"scaling ratio {ratio:.3f} outside [1.5, 3.0]"


def test_criterion_12_load_pipeline(acceptance):
    t0 = time.perf_counter()
    table = synthetic_load_table(start_year=2013, years=3, seed=11)
    train, test = year_split(table, 2015)
    clean_mlr = run_forecast_experiment(train, test, method="MLR")
    clean_tss = run_forecast_experiment(train, test, method="TSSARM")
    attack = AttackSpec(kind="PosUniform", fraction_k=40.0,
                        params=(20.0, 50.0), seed=5)
    atk_mlr = run_forecast_experiment(train, test, attack=attack,
                                      method="MLR")
    atk_tss = run_forecast_experiment(train, test, attack=attack,
                                      method="TSSARM")
    clean_gap = abs(clean_mlr.mape - clean_tss.mape)
    atk_ratio = atk_tss.mape / atk_mlr.mape
    dt = time.perf_counter() - t0
    clean_ok = clean_gap <= 0.5
    atk_ok = atk_tss.mape <= 0.7 * atk_mlr.mape
    ok = clean_ok and atk_ok and dt < 300
    acceptance.record(12, ok, (
        f"clean MAPE gap {clean_gap:.3f}pp <= 0.5 (MLR {clean_mlr.mape:.2f}, "
        f"TSSARM {clean_tss.mape:.2f}); attacked TSSARM/MLR {atk_ratio:.2f} "
        f"<= 0.7 (MLR {atk_mlr.mape:.2f}, TSSARM {atk_tss.mape:.2f}); "
        f"{dt:.0f}s"))
    assert clean_ok, (
        f"clean MAPE gap {clean_gap:.3f}pp > 0.5 "
        f"(MLR {clean_mlr.mape:.3f}, TSSARM {clean_tss.mape:.3f})")
    assert atk_ok, (
        f"attacked TSSARM {atk_tss.mape:.3f} > 0.7x MLR {atk_mlr.mape:.3f}")
    assert dt < 300, f"elapsed {dt:.0f}s >= 5min"


def test_criterion_13_determinism(tmp_path, acceptance):
    blobs = []
    for name in ("first", "second"):
        plan = ExperimentPlan(type_id="T1", m=512, n=16, p_grid=(0.3,),
                              methods=("SARM", "OLS", "AROSI"),
                              repetitions=50, base_seed=0,
                              out_dir=str(tmp_path / name))
        trials_path, _ = run_plan(plan)
        blobs.append(open(trials_path, "rb").read())
    ok = blobs[0] == blobs[1]
    acceptance.record(13, ok, (
        f"re-run of a 50-rep plan: trials.csv byte-identical "
        f"({len(blobs[0])} bytes)"))
    assert ok, "per-trial CSV differs between identical runs"
