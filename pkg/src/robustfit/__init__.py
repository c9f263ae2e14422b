"""Robust linear regression under sparse gross corruption.

Core solvers: sarm_fit (self-scaled outlier shrinkage) and tssarm_fit (its
two-stage variant for ill-conditioned designs).  Around them: reference
estimators, deterministic scenario generators, theory-verification
diagnostics, a load-forecasting pipeline with data-integrity attack
simulation, and a Monte Carlo benchmark engine exposed through the
`robustfit` command-line tool.
"""

from .baselines import (
    AllZeroWeights,
    BaselineConfig,
    EmptyInlierSet,
    fit_arosi,
    fit_gard,
    fit_ideal,
    fit_ipod,
    fit_irls_bisquare,
    fit_lad,
    fit_ols,
    fit_oracle,
    fit_trlm,
)
from .bench import ExperimentPlan, NoTrace, TrialResult, export_trace, run_plan, time_scaling_run
from .diagnostics import (
    TheoryReport,
    TooShort,
    brute_force_small_fit,
    check_descent,
    check_zstep_bound,
    run_theory_sweep,
    tail_ratio,
)
from .linalg import (
    NoConvergence,
    NotPositiveDefinite,
    ShapeMismatch,
    SingularFactor,
    cholesky_upper,
    matmul,
    matvec,
    solve_upper_triangular,
    sym_eig,
    transpose_matvec,
)
from .loadcast import (
    AttackSpec,
    FeatureSchema,
    ForecastReport,
    InsufficientCoverage,
    LoadTable,
    MissingColumn,
    NonMonotoneTimestamps,
    ParseError,
    ZeroActual,
    apply_attack,
    build_features,
    ingest_csv,
    mape,
    run_forecast_experiment,
    synthetic_load_table,
    year_split,
)
from .sarm import (
    RegressionFit,
    SarmConfig,
    SolveTrace,
    gamma_fn,
    grad_w,
    kappa_fn,
    objective,
    precondition,
    prox_z,
    sarm_fit,
    smooth_s,
    t_fn,
)
from .simgen import (
    InvalidSpec,
    SimInstance,
    SimSpec,
    ZeroTruth,
    generate,
    relative_l2_error,
)
from .tssarm import (
    EmptySpectrum,
    SpectralSplit,
    TssarmConfig,
    select_rank,
    spectral_split,
    tssarm_fit,
)

__version__ = "0.1.0"
