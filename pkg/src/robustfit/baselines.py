"""Reference and comparison estimators.

Everything here is deterministic given (X, y, config).  Estimators that
assume the inlier noise level sigma is known (TLRM, AROSI, IPOD, GARD) take
it from BaselineConfig and threshold residuals at threshold_sigmas * sigma.

fit_trlm, fit_arosi, and fit_ipod return (w, z); the others return w alone
except fit_gard, which also reports whether its residual bound was met.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import ShapeMismatch, as_matrix, as_vector, solve_normal_equations


class EmptyInlierSet(ArithmeticError):
    """Every row was classified as an outlier; the estimator broke down."""


class AllZeroWeights(ArithmeticError):
    """The bisquare weighting zeroed out every observation."""


@dataclass
class BaselineConfig:
    """Shared knobs for the baseline estimators.

    sigma is the known inlier noise standard deviation, required by the
    thresholding estimators.  bisquare_c is the usual 95%-efficiency tuning
    constant.  lad_tol/lad_max_iter control the inner reweighted solver that
    approximates the least-absolute-deviation fit.
    """

    sigma: Optional[float] = None
    tol: float = 1e-6
    max_iter: int = 500
    bisquare_c: float = 4.685
    threshold_sigmas: float = 5.0
    lad_tol: float = 1e-8
    lad_max_iter: int = 500

    def __post_init__(self):
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not self.tol > 0 or not self.lad_tol > 0:
            raise ValueError("tolerances must be > 0")
        if self.max_iter < 1 or self.lad_max_iter < 1:
            raise ValueError("iteration caps must be >= 1")

    def require_sigma(self, method):
        if self.sigma is None:
            raise ValueError(f"{method} requires config.sigma")
        return self.sigma


def _check_xy(X, y):
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y


def fit_ols(X, y):
    """Least squares via Cholesky on the normal equations."""
    X, y = _check_xy(X, y)
    return solve_normal_equations(X.T @ X, X.T @ y)


def _fit_wols(X, y, weights):
    Xw = X * weights[:, None]
    return solve_normal_equations(X.T @ Xw, Xw.T @ y)


def fit_ideal(X, y, z_true):
    """Least squares after subtracting the true corruption vector."""
    X, y = _check_xy(X, y)
    z_true = as_vector(z_true, "z_true")
    if z_true.shape[0] != y.shape[0]:
        raise ShapeMismatch("z_true length must match y")
    return fit_ols(X, y - z_true)


def fit_oracle(X, y, support):
    """Least squares on the rows outside the true corruption support."""
    X, y = _check_xy(X, y)
    support = np.asarray(support, dtype=int)
    if support.size and (support.min() < 0 or support.max() >= y.shape[0]):
        raise ValueError("support indices out of range")
    mask = np.ones(y.shape[0], dtype=bool)
    mask[support] = False
    return fit_ols(X[mask], y[mask])


def fit_irls_bisquare(X, y, config=None):
    """Bisquare M-estimator via iteratively reweighted least squares.

    Weights are (1 - (u/c)**2)**2 for |u| <= c and 0 beyond, with
    u = r / s_hat and s_hat the normalized median absolute deviation of the
    current residuals, recomputed every iteration.
    """
    X, y = _check_xy(X, y)
    cfg = config or BaselineConfig()
    c = cfg.bisquare_c
    w = fit_ols(X, y)
    for _ in range(cfg.max_iter):
        r = y - X @ w
        s = np.median(np.abs(r - np.median(r))) / 0.6745
        if s <= 0:
            break
        u = r / (c * s)
        wts = np.where(np.abs(u) < 1, (1 - u ** 2) ** 2, 0.0)
        if not np.any(wts > 0):
            raise AllZeroWeights("bisquare weights all vanished")
        w_new = _fit_wols(X, y, wts)
        if np.linalg.norm(w_new - w) <= cfg.tol * (1 + np.linalg.norm(w)):
            return w_new
        w = w_new
    return w


def fit_lad(X, y, config=None):
    """Approximate least-absolute-deviation fit via smoothed reweighting.

    Minimizes sum |r_i| through weights 1/max(|r_i|, eps) with
    eps = 1e-6 * median(|y|); an approximation of the linear-programming
    formulation that is exact enough for the median special case and the
    robustness experiments.
    """
    X, y = _check_xy(X, y)
    cfg = config or BaselineConfig()
    eps = 1e-6 * max(float(np.median(np.abs(y))), 1e-12)
    w = fit_ols(X, y)
    for _ in range(cfg.lad_max_iter):
        r = y - X @ w
        wts = 1.0 / np.maximum(np.abs(r), eps)
        w_new = _fit_wols(X, y, wts)
        if np.linalg.norm(w_new - w) <= cfg.lad_tol * (1 + np.linalg.norm(w)):
            return w_new
        w = w_new
    return w


def _threshold_z(r, thr):
    return np.where(np.abs(r) <= thr, 0.0, r)


def fit_trlm(X, y, config):
    """Trimmed refitting with a squared loss.

    Alternates a least-squares fit on the current inlier set with a
    residual threshold at threshold_sigmas * sigma; stops when the refit no
    longer improves the trimmed loss (the iterate freezes on ties).
    """
    X, y = _check_xy(X, y)
    sigma = config.require_sigma("fit_trlm")
    thr = config.threshold_sigmas * sigma
    w = fit_ols(X, y)
    for _ in range(config.max_iter):
        r = y - X @ w
        S = np.abs(r) <= thr
        if not np.any(S):
            raise EmptyInlierSet("every residual exceeded the threshold")
        w_new = fit_ols(X[S], y[S])
        loss = float(np.sum((y[S] - X[S] @ w_new) ** 2))
        loss_old = float(np.sum((y[S] - X[S] @ w) ** 2))
        if loss >= loss_old - 1e-12:
            break
        w = w_new
    z = _threshold_z(y - X @ w, thr)
    return w, z


def fit_arosi(X, y, config):
    """Trimmed refitting with an absolute loss (LAD inner solver)."""
    X, y = _check_xy(X, y)
    sigma = config.require_sigma("fit_arosi")
    thr = config.threshold_sigmas * sigma
    w = fit_lad(X, y, config)
    for _ in range(config.max_iter):
        r = y - X @ w
        S = np.abs(r) <= thr
        if not np.any(S):
            raise EmptyInlierSet("every residual exceeded the threshold")
        w_new = fit_lad(X[S], y[S], config)
        loss = float(np.sum(np.abs(y[S] - X[S] @ w_new)))
        loss_old = float(np.sum(np.abs(y[S] - X[S] @ w)))
        if loss >= loss_old - 1e-12:
            break
        w = w_new
    z = _threshold_z(y - X @ w, thr)
    return w, z


def fit_ipod(X, y, config, w0=None):
    """Alternate hard thresholding of residuals with refitting on y - z.

    Starts from the LAD estimate unless w0 is supplied.  Shares its fixed
    points with fit_trlm even though the per-iteration maps differ.
    """
    X, y = _check_xy(X, y)
    sigma = config.require_sigma("fit_ipod")
    thr = config.threshold_sigmas * sigma
    w = fit_lad(X, y, config) if w0 is None else np.asarray(w0, dtype=float)
    for _ in range(config.max_iter):
        r = y - X @ w
        z = _threshold_z(r, thr)
        w_new = fit_ols(X, y - z)
        if np.linalg.norm(w_new - w) <= config.tol * (1 + np.linalg.norm(w)):
            w = w_new
            break
        w = w_new
    z = _threshold_z(y - X @ w, thr)
    return w, z


def fit_gard(X, y, config):
    """Greedy outlier identification on the augmented design [X, I].

    The active set starts with all columns of X; each round adds the
    identity column at the largest absolute residual and re-solves the
    joint least-squares problem (equivalently: plain least squares on the
    rows not yet claimed by an identity column).  Stops when the residual
    norm drops to sqrt(m) * sigma or after m - n atoms.

    Returns (w, z, terminated); terminated=False means the residual bound
    was never met before the atom budget ran out.
    """
    X, y = _check_xy(X, y)
    sigma = config.require_sigma("fit_gard")
    m, n = X.shape
    bound = np.sqrt(m) * sigma
    active = []
    w = fit_ols(X, y)
    res = y - X @ w
    for _ in range(m - n):
        if np.linalg.norm(res) <= bound:
            break
        active.append(int(np.argmax(np.abs(res))))
        mask = np.ones(m, dtype=bool)
        mask[active] = False
        w = fit_ols(X[mask], y[mask])
        res = y - X @ w
        res[active] = 0.0
    z = np.zeros(m)
    if active:
        z[active] = (y - X @ w)[active]
    terminated = bool(np.linalg.norm(res) <= bound)
    return w, z, terminated
