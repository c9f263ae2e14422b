"""Two-stage SARM for ill-conditioned designs.

When the spectrum of X has a sharp drop (trailing singular values below
eta * s_1), a single preconditioned solve spreads the corruption energy
across directions the data barely constrains.  The two-stage variant first
solves a robust pre-estimation problem restricted to the leading q singular
directions, with an inflated regularization delta_pre to absorb the energy
of the discarded tail, then warm-starts a full-dimension solve from that
pre-estimate.

Both stages operate on spectrally whitened designs X V diag(1/s) whose
columns are exactly orthonormal, so the unit step size remains admissible.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import NotPositiveDefinite, ShapeMismatch, as_matrix, as_vector, sym_eig
from .sarm import RegressionFit, SarmConfig, SolveTrace, _sarm_loop, sarm_fit


class EmptySpectrum(ValueError):
    """select_rank received an empty singular-value sequence."""


@dataclass
class TssarmConfig:
    """Two-stage solver knobs.

    eta is the singular-value ratio that triggers compression (default
    0.005).  delta_pre is the pre-estimation regularization; it defaults to
    2 * base.delta and must not be smaller than base.delta.  With
    pre_threshold_base=True (the default) the stage-1 z-update thresholds at
    sqrt(base.delta) while its w-update and monitored objective use
    delta_pre; setting it False uses delta_pre for the stage-1 z-update too.
    """

    base: SarmConfig
    eta: float = 0.005
    delta_pre: Optional[float] = None
    pre_threshold_base: bool = True

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise ValueError(f"eta must be in [0, 1], got {self.eta}")
        if self.delta_pre is None:
            self.delta_pre = 2.0 * self.base.delta
        if self.delta_pre < self.base.delta:
            raise ValueError(
                f"delta_pre ({self.delta_pre}) must be >= base delta "
                f"({self.base.delta})")


@dataclass
class SpectralSplit:
    """Rank decision plus the eigen-pair of X.T X that produced it.

    eigvals are the descending eigenvalues of X.T X (squared singular values
    of X); eigvecs holds the matching orthonormal columns.
    """

    q: int
    eigvals: np.ndarray
    eigvecs: np.ndarray

    def singular_values(self):
        return np.sqrt(np.maximum(self.eigvals, 0.0))


@dataclass
class StageInfo:
    """Stage-1 bookkeeping returned by tssarm_fit(..., return_stages=True)."""

    split: SpectralSplit
    pre_iterations: int = 0
    pre_converged: bool = True
    pre_trace: Optional[SolveTrace] = None
    delegated: bool = False


def select_rank(singular_values, eta):
    """Smallest q with s_{q+1} < eta * s_1, or n when no tail qualifies."""
    s = as_vector(singular_values, "singular_values")
    if s.shape[0] == 0:
        raise EmptySpectrum("no singular values given")
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    n = s.shape[0]
    for i in range(1, n):
        if s[i] < eta * s[0]:
            return i
    return n


def spectral_split(X, eta):
    """Eigendecompose X.T X and apply the rank-selection rule."""
    X = as_matrix(X, "X")
    lam, V = sym_eig(X.T @ X)
    s = np.sqrt(np.maximum(lam, 0.0))
    q = select_rank(s, eta)
    return SpectralSplit(q=q, eigvals=lam, eigvecs=V)


def tssarm_fit(X, y, config, return_stages=False):
    """Two-stage robust fit.

    Well-conditioned inputs (selected rank q equal to n) are delegated to
    sarm_fit with the base config, so the result is identical to the
    single-stage solver there.  Otherwise stage 1 runs on the leading-q
    whitened design from a cold start, stage 2 runs on the full whitened
    design warm-started at (w_pre padded with zeros, z_pre), and the final
    coefficients are mapped back through V diag(1/s).

    The returned trace covers stage 2 (the full-dimension solve);
    iterations counts both stages.  converged requires both stages to have
    met the decrement test.
    """
    t0 = time.perf_counter()
    X = as_matrix(X, "X")
    y = as_vector(y, "y")
    m, n = X.shape
    if m < n:
        raise ShapeMismatch(f"need m >= n, got shape {X.shape}")
    if y.shape[0] != m:
        raise ShapeMismatch(f"X has {m} rows but y has {y.shape[0]}")
    split = spectral_split(X, config.eta)
    if split.q == n:
        fit = sarm_fit(X, y, config.base)
        if return_stages:
            return fit, StageInfo(split=split, delegated=True)
        return fit
    s = split.singular_values()
    if s[-1] <= s[0] * 1e-15:
        raise NotPositiveDefinite("design is rank deficient")
    V = split.eigvecs
    q = split.q
    base = config.base
    delta_z1 = base.delta if config.pre_threshold_base else config.delta_pre

    C1 = X @ (V[:, :q] / s[:q])
    w_pre, z_pre, it1, conv1, trace1 = _sarm_loop(
        C1, y, np.zeros(q), np.zeros(m),
        config.delta_pre, delta_z1, base.alpha, base.tol, base.max_iter,
        base.record_trace)

    C2 = X @ (V / s)
    w0 = np.concatenate([w_pre, np.zeros(n - q)])
    w2, z2, it2, conv2, trace2 = _sarm_loop(
        C2, y, w0, z_pre,
        base.delta, base.delta, base.alpha, base.tol, base.max_iter,
        base.record_trace)

    w_hat = (V / s) @ w2
    fit = RegressionFit(
        w_hat=w_hat, z_hat=z2, iterations=it1 + it2,
        converged=conv1 and conv2, trace=trace2,
        wall_time=time.perf_counter() - t0)
    if return_stages:
        return fit, StageInfo(split=split, pre_iterations=it1,
                              pre_converged=conv1, pre_trace=trace1)
    return fit
