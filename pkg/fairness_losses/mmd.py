"""
mmd.py — Gaussian-RBF Maximum Mean Discrepancy between 1-D score samples.

Kernel: k(x, y) = exp(−(x − y)² / (2h²)).
The biased V-statistic is the loss path (never negative beyond rounding);
the unbiased U-statistic is exposed for reporting. Gradients are analytic and
treat the bandwidth as a constant.
"""

import math
from dataclasses import dataclass
from typing import Literal, Sequence, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist

from shared_utils.errors import InputError, NonPositiveBandwidth, TooFewSamples

BANDWIDTH_FLOOR = 1e-6


@dataclass(frozen=True)
class KernelConfig:
    bandwidth_mode: Literal["median", "fixed"] = "median"
    bandwidth: float | None = None
    estimator: Literal["biased", "unbiased"] = "biased"

    def __post_init__(self):
        if self.bandwidth_mode not in ("median", "fixed"):
            raise ValueError(f"unknown bandwidth_mode {self.bandwidth_mode!r}")
        if self.estimator not in ("biased", "unbiased"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.bandwidth_mode == "fixed" and not (self.bandwidth is not None and self.bandwidth > 0):
            raise NonPositiveBandwidth(f"fixed bandwidth must be > 0, got {self.bandwidth}")

    @classmethod
    def fixed(cls, h: float, estimator: str = "biased") -> "KernelConfig":
        return cls(bandwidth_mode="fixed", bandwidth=h, estimator=estimator)


@dataclass(frozen=True)
class ScoreSet:
    """Alignment scores A_g of one subgroup."""
    subgroup: object
    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64).ravel()
        if s.size == 0:
            raise TooFewSamples(f"score set for {self.subgroup} is empty")
        if not np.all(np.isfinite(s)):
            raise InputError(f"score set for {self.subgroup} has non-finite values")
        object.__setattr__(self, "scores", s)

    def __len__(self) -> int:
        return int(self.scores.size)


Scores = Union[ScoreSet, Sequence[float], np.ndarray]


def _values(s: Scores) -> np.ndarray:
    if isinstance(s, ScoreSet):
        return s.scores
    return ScoreSet(subgroup=None, scores=s).scores


def rbf_kernel(x: float, y: float, h: float) -> float:
    if not h > 0:
        raise NonPositiveBandwidth(f"bandwidth must be > 0, got {h}")
    return float(np.exp(-((x - y) ** 2) / (2.0 * h * h)))


def _gram(a: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    return np.exp(-cdist(a[:, None], b[:, None], "sqeuclidean") / (2.0 * h * h))


def _fsum(k: np.ndarray) -> float:
    # exactly rounded, so swapping X and Y cannot change the result
    return math.fsum(k.ravel().tolist())


def median_heuristic_bandwidth(pooled: Scores) -> float:
    """Median pairwise absolute difference of the pooled sample, floored at 1e-6."""
    values = _values(pooled)
    if values.size < 2:
        return BANDWIDTH_FLOOR
    return max(float(np.median(pdist(values[:, None], "cityblock"))), BANDWIDTH_FLOOR)


def resolve_bandwidth(cfg: KernelConfig, *samples: Scores) -> float:
    if cfg.bandwidth_mode == "fixed":
        return float(cfg.bandwidth)
    return median_heuristic_bandwidth(np.concatenate([_values(s) for s in samples]))


def _check_sizes(x: np.ndarray, y: np.ndarray, estimator: str) -> None:
    if estimator == "unbiased" and (x.size < 2 or y.size < 2):
        raise TooFewSamples(f"unbiased MMD² needs ≥ 2 points per side, got {x.size} and {y.size}")


def mmd2(X: Scores, Y: Scores, cfg: KernelConfig = KernelConfig(), bandwidth: float | None = None) -> float:
    """Squared MMD between X and Y.

    `bandwidth` overrides the config, which lets callers share one median-heuristic
    bandwidth across every subgroup pair of a batch.
    """
    x, y = _values(X), _values(Y)
    _check_sizes(x, y, cfg.estimator)
    h = bandwidth if bandwidth is not None else resolve_bandwidth(cfg, x, y)
    if not h > 0:
        raise NonPositiveBandwidth(f"bandwidth must be > 0, got {h}")
    kxx, kyy, kxy = _gram(x, x, h), _gram(y, y, h), _gram(x, y, h)
    m, n = x.size, y.size
    cross = _fsum(kxy) / (m * n)
    if cfg.estimator == "biased":
        return float(_fsum(kxx) / (m * m) + _fsum(kyy) / (n * n) - 2.0 * cross)
    xx = (_fsum(kxx) - m) / (m * (m - 1))
    yy = (_fsum(kyy) - n) / (n * (n - 1))
    return float(xx + yy - 2.0 * cross)


def mmd2_grad(
    X: Scores,
    Y: Scores,
    cfg: KernelConfig = KernelConfig(),
    bandwidth: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic ∂MMD²/∂x and ∂MMD²/∂y of the biased estimator."""
    x, y = _values(X), _values(Y)
    h = bandwidth if bandwidth is not None else resolve_bandwidth(cfg, x, y)
    if not h > 0:
        raise NonPositiveBandwidth(f"bandwidth must be > 0, got {h}")
    m, n = x.size, y.size
    inv_h2 = 1.0 / (h * h)

    # ∂k(u, v)/∂u = −k(u, v)·(u − v)/h²
    dxx = x[:, None] - x[None, :]
    dyy = y[:, None] - y[None, :]
    dxy = x[:, None] - y[None, :]
    kxx = np.exp(-dxx**2 * 0.5 * inv_h2)
    kyy = np.exp(-dyy**2 * 0.5 * inv_h2)
    kxy = np.exp(-dxy**2 * 0.5 * inv_h2)

    grad_x = (2.0 / (m * m)) * (-(kxx * dxx) * inv_h2).sum(axis=1) \
        - (2.0 / (m * n)) * (-(kxy * dxy) * inv_h2).sum(axis=1)
    grad_y = (2.0 / (n * n)) * (-(kyy * dyy) * inv_h2).sum(axis=1) \
        - (2.0 / (m * n)) * ((kxy * dxy) * inv_h2).sum(axis=0)
    return grad_x, grad_y
