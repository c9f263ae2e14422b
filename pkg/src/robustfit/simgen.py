"""Deterministic synthetic-corruption generators and the error metric.

Six scenario families (T1..T6) share the additive model
y = X w_true + e + z_true with Gaussian inlier noise e and sparse gross
corruption z_true on round(p * m) rows chosen uniformly without
replacement.

Randomness comes from numpy's seeded default generator (PCG64), with a
fixed draw order per scenario: design entries, coefficients, noise,
corruption positions, corruption magnitudes.  The same SimSpec therefore
always reproduces the same instance bitwise on a given platform.
"""

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .linalg import ShapeMismatch, as_vector

TYPE_IDS = ("T1", "T2", "T3", "T4", "T5", "T6")


class InvalidSpec(ValueError):
    """Scenario or attack parameters are out of contract."""


class ZeroTruth(ValueError):
    """relative_l2_error needs a nonzero ground-truth vector."""


@dataclass
class SimSpec:
    """Scenario parameters: family, shape, corruption rate, and seed.

    kappa scales the corruption spread and applies only to T5 scenarios.
    """

    type_id: str
    m: int
    n: int
    p: float
    seed: int
    kappa: Optional[float] = None

    def __post_init__(self):
        if self.type_id not in TYPE_IDS:
            raise InvalidSpec(f"unknown type_id {self.type_id!r}")
        if self.m < 1 or self.n < 1:
            raise InvalidSpec(f"need m >= 1 and n >= 1, got m={self.m} n={self.n}")
        if not 0 <= self.p <= 1:
            raise InvalidSpec(f"p must be in [0, 1], got {self.p}")
        if self.type_id == "T5":
            if self.kappa is None or self.kappa <= 0:
                raise InvalidSpec("T5 requires kappa > 0")
        elif self.kappa is not None:
            raise InvalidSpec(f"kappa is only meaningful for T5, got type {self.type_id}")

    def to_json(self):
        return json.dumps({k: v for k, v in asdict(self).items() if v is not None})

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def to_key_value(self):
        items = [(k, v) for k, v in asdict(self).items() if v is not None]
        return "\n".join(f"{k}={v}" for k, v in items)

    @classmethod
    def from_key_value(cls, text):
        fields = {}
        for line in text.strip().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidSpec(f"bad key=value line: {line!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            value = value.strip()
            if key in ("m", "n", "seed"):
                fields[key] = int(value)
            elif key in ("p", "kappa"):
                fields[key] = float(value)
            else:
                fields[key] = value
        return cls(**fields)


@dataclass
class SimInstance:
    """One generated dataset plus its ground truth."""

    X: np.ndarray
    y: np.ndarray
    w_true: np.ndarray
    z_true: np.ndarray
    e: np.ndarray
    sigma: float

    @property
    def support(self):
        return np.flatnonzero(self.z_true)


def _type6_design(rng, m, n):
    # Column-mixing matrix with a geometrically decaying diagonal; columns
    # sum to 1, producing the steep trailing spectrum the two-stage solver
    # targets.
    D = rng.standard_normal((m, n))
    d = np.exp(np.linspace(-0.1, np.log(1.1 / n), n))
    B = np.empty((n, n))
    for j in range(n):
        B[:, j] = (1 - d[j]) / (n - 1)
        B[j, j] = d[j]
    return D @ B


def generate(spec):
    """Draw the instance described by spec.

    T1: standard normal design, sigma = median(|X w|)/16, corruption from an
    equal mixture of N(12 sigma, (4 sigma)^2) and N(-12 sigma, (4 sigma)^2).
    T3: like T1 with single-signed corruption N(12 sigma, (4 sigma)^2).
    T5: like T1 with centered corruption N(0, (kappa sigma)^2).
    T6: like T1 with the ill-conditioned mixed design.
    T2: uniform design on [0,1), coefficients N(0, 25), sigma = 1,
    corruption uniformly from {-25, +25}.  T4: like T2 with constant +25.
    """
    if not isinstance(spec, SimSpec):
        raise InvalidSpec(f"expected SimSpec, got {type(spec).__name__}")
    m, n, p = spec.m, spec.n, spec.p
    rng = np.random.default_rng(spec.seed)
    k = int(round(p * m))
    z = np.zeros(m)
    if spec.type_id in ("T1", "T3", "T5", "T6"):
        if spec.type_id == "T6":
            X = _type6_design(rng, m, n)
        else:
            X = rng.standard_normal((m, n))
        w = rng.standard_normal(n)
        sigma = float(np.median(np.abs(X @ w)) / 16.0)
        e = rng.normal(0.0, sigma, m)
        pos = rng.choice(m, size=k, replace=False)
        if k:
            if spec.type_id in ("T1", "T6"):
                sgn = np.where(rng.random(k) < 0.5, 1.0, -1.0)
                z[pos] = sgn * 12 * sigma + 4 * sigma * rng.standard_normal(k)
            elif spec.type_id == "T3":
                z[pos] = 12 * sigma + 4 * sigma * rng.standard_normal(k)
            else:
                z[pos] = rng.normal(0.0, spec.kappa * sigma, k)
    else:
        X = rng.random((m, n))
        w = rng.normal(0.0, 5.0, n)
        sigma = 1.0
        e = rng.normal(0.0, sigma, m)
        pos = rng.choice(m, size=k, replace=False)
        if k:
            if spec.type_id == "T2":
                z[pos] = np.where(rng.random(k) < 0.5, 25.0, -25.0)
            else:
                z[pos] = 25.0
    y = X @ w + e + z
    return SimInstance(X=X, y=y, w_true=w, z_true=z, e=e, sigma=sigma)


def relative_l2_error(w_hat, w_true):
    """||w_hat - w_true|| / ||w_true||."""
    w_hat = as_vector(w_hat, "w_hat")
    w_true = as_vector(w_true, "w_true")
    if w_hat.shape != w_true.shape:
        raise ShapeMismatch(f"length mismatch: {w_hat.shape} vs {w_true.shape}")
    denom = float(np.linalg.norm(w_true))
    if denom == 0.0:
        raise ZeroTruth("ground-truth vector has zero norm")
    return float(np.linalg.norm(w_hat - w_true)) / denom
