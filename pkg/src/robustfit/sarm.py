"""Self-scaled outlier-shrinkage regression (SARM).

The model is y = X w + e + z with dense inlier noise e and sparse gross
corruption z.  The solver minimizes

    H(w, z) = 0.5 * ||y - X w - z||^2 + delta * sum_i |z_i| / S(y_i - x_i.T w)

by alternating an exact proximal update in z with one gradient step in w.
S is a smoothed absolute value that never drops below sqrt(delta)/2, so the
penalty weight 1/S(r_i) collapses toward |1/r_i| exactly on rows whose
residuals are large; the ratio z_i / S(r_i) then approaches sign agreement
with magnitude 1 and the penalty behaves like a count of active outliers.

The design matrix is preconditioned to X L^{-1} (Cholesky factor L of X.T X)
so the working design has orthonormal columns and unit spectral norm; the
step size alpha = 1 is then always admissible.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import (
    ShapeMismatch,
    as_matrix,
    as_vector,
    cholesky_upper,
    solve_upper_triangular,
)


@dataclass
class SarmConfig:
    """Solver hyperparameters.

    delta is in squared response units; the usual choice is 6 * sigma**2 for
    inlier noise level sigma.  alpha must lie in (0, 2] (the preconditioned
    design has unit spectral norm, so 2 is the stability limit).  Convergence
    is declared when the absolute objective decrement falls to tol or below.
    """

    delta: float
    alpha: float = 1.0
    tol: float = 1e-6
    max_iter: int = 10000
    record_trace: bool = False

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not 0 < self.alpha <= 2:
            raise ValueError(f"alpha must be in (0, 2], got {self.alpha}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class SolveTrace:
    """Per-iteration diagnostics; every sequence has one entry per iteration.

    objective_values[k] is H after iteration k+1; initial_objective holds
    H at the starting point so decrements can be reconstructed for every
    recorded iteration.  grad_norms[k] is the gradient norm at the iterate
    produced by iteration k+1.
    """

    objective_values: np.ndarray
    w_step_norms: np.ndarray
    z_step_norms: np.ndarray
    grad_norms: np.ndarray
    initial_objective: float = float("nan")

    def __len__(self):
        return len(self.objective_values)


@dataclass
class RegressionFit:
    """Result of a robust fit: coefficients, outlier estimates, and status."""

    w_hat: np.ndarray
    z_hat: np.ndarray
    iterations: int
    converged: bool
    trace: Optional[SolveTrace]
    wall_time: float


def smooth_s(x, delta):
    """Smoothed absolute value: x**2/(2*sqrt(delta)) + sqrt(delta)/2 inside
    (-sqrt(delta), sqrt(delta)), |x| outside.  Always >= max(|x|, sqrt(delta)/2).
    """
    x = np.asarray(x, dtype=float)
    rd = np.sqrt(delta)
    out = np.where(np.abs(x) < rd, x * x / (2 * rd) + rd / 2, np.abs(x))
    return out if out.ndim else float(out)


def prox_z(r, delta):
    """Closed-form minimizer of 0.5*(r - z)**2 + delta*|z|/S(r) over z.

    Zero when |r| <= sqrt(delta), otherwise r - delta/r.  The output keeps
    the sign of r (or is zero) and is strictly smaller in magnitude.
    """
    r = np.asarray(r, dtype=float)
    rd = np.sqrt(delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(r) <= rd, 0.0,
                       r - delta / np.where(r == 0, 1.0, r))
    return out if out.ndim else float(out)


def t_fn(x, delta):
    """Odd thresholding map: 0 on [-sqrt(delta), sqrt(delta)], x - delta/x
    outside.  Identical to prox_z as a function; kept separate because its
    2-Lipschitz property is what the z-step bound checks rely on.
    """
    return prox_z(x, delta)


def gamma_fn(x, delta):
    """S'(x)/S(x)**2: 4*sqrt(delta)*x/(x**2+delta)**2 inside, sign(x)/x**2 outside."""
    x = np.asarray(x, dtype=float)
    rd = np.sqrt(delta)
    inner = 4 * rd * x / (x * x + delta) ** 2
    with np.errstate(divide="ignore"):
        outer = np.where(x == 0, 0.0, np.sign(x) / np.where(x == 0, 1.0, x * x))
    out = np.where(np.abs(x) < rd, inner, outer)
    return out if out.ndim else float(out)


def kappa_fn(x, delta):
    """S'(x)/S(x): 2*x/(x**2+delta) inside, 1/x outside."""
    x = np.asarray(x, dtype=float)
    rd = np.sqrt(delta)
    inner = 2 * x / (x * x + delta)
    with np.errstate(divide="ignore"):
        outer = np.where(x == 0, 0.0, 1.0 / np.where(x == 0, 1.0, x))
    out = np.where(np.abs(x) < rd, inner, outer)
    return out if out.ndim else float(out)


def precondition(X):
    """Return (Xp, L) with L the upper Cholesky factor of X.T X and
    Xp = X L^{-1}, which has exactly orthonormal columns up to rounding.
    """
    X = as_matrix(X, "X")
    L = cholesky_upper(X.T @ X)
    Xp = solve_upper_triangular(L, X.T, transpose=True).T
    return Xp, L


def _objective_r(r, z, delta):
    return 0.5 * float(np.sum((r - z) ** 2)) + delta * float(
        np.sum(np.abs(z) / smooth_s(r, delta)))


def objective(Xp, y, w, z, delta):
    """H(w, z) = 0.5*||y - Xp w - z||^2 + delta * sum |z_i| / S(r_i)."""
    Xp = as_matrix(Xp, "Xp")
    y = as_vector(y, "y")
    w = as_vector(w, "w")
    z = as_vector(z, "z")
    r = y - Xp @ w
    return _objective_r(r, z, delta)


def _grad_r(Xp, r, z, delta):
    return Xp.T @ (z - r) + delta * (Xp.T @ (np.abs(z) * gamma_fn(r, delta)))


def grad_w(Xp, y, w, z, delta):
    """Gradient of H in w at arbitrary (w, z).

    Equals Xp.T (Xp w - y + z) + delta * Xp.T [|z_i| * S'(r_i)/S(r_i)**2]
    with r = y - Xp w.  Validated against central finite differences; on
    iterates where z was produced by prox_z(r) the bracket reduces to
    z_i / S(r_i)**2 because sign(z_i) = sign(r_i) there.
    """
    Xp = as_matrix(Xp, "Xp")
    y = as_vector(y, "y")
    w = as_vector(w, "w")
    z = as_vector(z, "z")
    r = y - Xp @ w
    return _grad_r(Xp, r, z, delta)


def _sarm_loop(Xp, y, w0, z0, delta_w, delta_z, alpha, tol, max_iter,
               record_trace):
    """Shared iteration: gradient step in w (using delta_w in the penalty
    term), residual refresh, proximal z-update thresholded by delta_z, stop
    on absolute objective decrement <= tol.  The monitored objective uses
    delta_w throughout.  Returns (w, z, iterations, converged, trace).
    """
    w = np.array(w0, dtype=float, copy=True)
    z = np.array(z0, dtype=float, copy=True)
    r = y - Xp @ w
    H = _objective_r(r, z, delta_w)
    H0 = H
    Hs, wsteps, zsteps, gnorms = [], [], [], []
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        gam = np.abs(z) * gamma_fn(r, delta_w)
        w_new = w + alpha * (Xp.T @ (r - z)) - alpha * delta_w * (Xp.T @ gam)
        r = y - Xp @ w_new
        z_new = prox_z(r, delta_z)
        H_new = _objective_r(r, z_new, delta_w)
        if record_trace:
            Hs.append(H_new)
            wsteps.append(float(np.linalg.norm(w_new - w)))
            zsteps.append(float(np.linalg.norm(z_new - z)))
            gnorms.append(float(np.linalg.norm(_grad_r(Xp, r, z_new, delta_w))))
        done = abs(H - H_new) <= tol
        w, z, H = w_new, z_new, H_new
        if done:
            converged = True
            break
    trace = None
    if record_trace:
        trace = SolveTrace(
            objective_values=np.array(Hs),
            w_step_norms=np.array(wsteps),
            z_step_norms=np.array(zsteps),
            grad_norms=np.array(gnorms),
            initial_objective=H0,
        )
    return w, z, iterations, converged, trace


def sarm_fit(X, y, config):
    """Fit the robust model from a cold start (w = 0, z = 0).

    The design is preconditioned first, the iteration runs in the
    preconditioned coordinates, and the returned w_hat is mapped back to the
    original feature space by a triangular solve.  A fit that exhausts
    max_iter is returned with converged=False rather than raising.
    """
    t0 = time.perf_counter()
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    m, n = X.shape
    if m < n:
        raise ShapeMismatch(f"need m >= n, got shape {X.shape}")
    if y.shape[0] != m:
        raise ShapeMismatch(f"X has {m} rows but y has {y.shape[0]}")
    Xp, L = precondition(X)
    w, z, iterations, converged, trace = _sarm_loop(
        Xp, y, np.zeros(n), np.zeros(m),
        config.delta, config.delta, config.alpha, config.tol,
        config.max_iter, config.record_trace)
    w_hat = solve_upper_triangular(L, w)
    return RegressionFit(
        w_hat=w_hat, z_hat=z, iterations=iterations, converged=converged,
        trace=trace, wall_time=time.perf_counter() - t0)
