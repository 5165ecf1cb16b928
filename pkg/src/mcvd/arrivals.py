"""Count models for per-window arrival totals.

The number of molecules from a burst of ``n`` that arrive inside a given
time window is binomial with the window's capture probability. The Poisson
and Gaussian approximations to that binomial are provided under one type so
their quality can be compared on equal footing; the Kolmogorov-Smirnov
distance quantifies the fit against replicated simulation counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = ["BINOMIAL", "POISSON", "GAUSSIAN", "CountModel", "count_cdf", "ks_distance"]

BINOMIAL = "binomial"
POISSON = "poisson"
GAUSSIAN = "gaussian"
_KINDS = (BINOMIAL, POISSON, GAUSSIAN)


@dataclass(frozen=True)
class CountModel:
    """A count distribution parameterized like the underlying binomial.

    ``n`` is the trial count and ``p`` the per-trial success probability.
    The Poisson variant has mean n*p; the Gaussian variant has mean n*p and
    variance n*p*(1-p). For non-binomial kinds ``n`` may be any nonnegative
    real, so ``CountModel.poisson(mean)`` simply sets n=mean, p=1.
    """

    kind: str
    n: float
    p: float

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if math.isnan(self.n) or self.n < 0:
            raise ValueError(f"n must be nonnegative, got {self.n!r}")
        if math.isnan(self.p) or not (0.0 <= self.p <= 1.0):
            raise ValueError(f"p must be in [0, 1], got {self.p!r}")
        if self.kind == BINOMIAL and self.n != int(self.n):
            raise ValueError(f"binomial trial count must be an integer, got {self.n!r}")

    @classmethod
    def binomial(cls, n: int, p: float) -> "CountModel":
        return cls(BINOMIAL, n, p)

    @classmethod
    def poisson(cls, mean: float) -> "CountModel":
        return cls(POISSON, mean, 1.0)

    @classmethod
    def gaussian(cls, n: float, p: float) -> "CountModel":
        return cls(GAUSSIAN, n, p)

    @property
    def mean(self) -> float:
        return self.n * self.p

    @property
    def variance(self) -> float:
        if self.kind == POISSON:
            return self.mean
        return self.n * self.p * (1.0 - self.p)


def count_cdf(model: CountModel, k):
    """P(X <= k) under the model for integer k >= -1 (scalar or array).

    The binomial CDF goes through the regularized incomplete beta function
    and the Poisson CDF through the regularized upper incomplete gamma, so
    both stay accurate for n up to 1e6 without term summation. The Gaussian
    uses the continuity correction Phi((k + 0.5 - np) / sqrt(np(1-p))) and
    degrades to the point-mass step function when the variance is zero.
    """
    arr = np.asarray(k)
    if arr.dtype.kind == "f":
        if np.any(arr != np.floor(arr)):
            raise ValueError("k must be integer-valued")
        arr = arr.astype(np.int64)
    elif arr.dtype.kind not in "iu":
        raise ValueError(f"k must be integer-valued, got dtype {arr.dtype}")
    if np.any(arr < -1):
        raise ValueError("k must be >= -1")
    scalar = np.isscalar(k) or (hasattr(k, "ndim") and k.ndim == 0)

    kk = arr.astype(float)
    if model.kind == BINOMIAL:
        n = int(model.n)
        if model.p == 0.0 or n == 0:
            out = np.where(kk >= 0.0, 1.0, 0.0)
        else:
            clipped = np.minimum(kk, n)
            with np.errstate(invalid="ignore"):
                out = special.bdtr(clipped, n, model.p)
            out = np.where(kk < 0.0, 0.0, out)
            out = np.where(kk >= n, 1.0, out)
    elif model.kind == POISSON:
        mean = model.mean
        if mean == 0.0:
            out = np.where(kk >= 0.0, 1.0, 0.0)
        else:
            with np.errstate(invalid="ignore"):
                out = special.pdtr(np.maximum(kk, 0.0), mean)
            out = np.where(kk < 0.0, 0.0, out)
    else:
        mean = model.mean
        var = model.variance
        if var == 0.0:
            out = np.where(kk + 0.5 >= mean, 1.0, 0.0)
        else:
            out = special.ndtr((kk + 0.5 - mean) / math.sqrt(var))
        out = np.where(kk < 0.0, 0.0, out)  # k=-1 is exactly zero by contract
    out = np.asarray(out, dtype=float)
    return float(out[()]) if scalar else out


def ks_distance(samples, model: CountModel) -> float:
    """Kolmogorov-Smirnov distance between sampled counts and a model.

    ``samples`` is a nonempty collection of integer counts, one per
    replication. The supremum of |empirical CDF - model CDF| over integer
    support is attained on [min(samples)-1, max(samples)], which is all
    this scans.
    """
    arr = np.asarray(samples)
    if arr.size == 0:
        raise ValueError("samples must be nonempty")
    arr = np.asarray(arr, dtype=np.int64).reshape(-1)
    grid = np.arange(arr.min() - 1, arr.max() + 1, dtype=np.int64)
    sorted_samples = np.sort(arr)
    ecdf = np.searchsorted(sorted_samples, grid, side="right") / arr.size
    return float(np.max(np.abs(ecdf - count_cdf(model, grid))))
