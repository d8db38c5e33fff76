"""
hypothesis.py — Wilcoxon signed-rank and two-proportion z tests.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm, rankdata

from shared_utils.errors import AllZeroDifferences, DegeneratePooled, InputError

logger = logging.getLogger(__name__)

EXACT_MAX_N = 12
_TIE_SLACK = 1e-9


@dataclass(frozen=True)
class WilcoxonResult:
    W: float
    p_two_sided: float
    method: str             # "exact" or "normal_approx"
    n: int                  # nonzero differences used

    def to_dict(self) -> dict:
        return {"W": self.W, "p_two_sided": self.p_two_sided, "method": self.method, "n": self.n}


@dataclass(frozen=True)
class ZTestResult:
    z: float
    p_two_sided: float
    p1: float
    p2: float

    def to_dict(self) -> dict:
        return {"z": self.z, "p_two_sided": self.p_two_sided, "p1": self.p1, "p2": self.p2}


def _sign_enumeration(ranks: np.ndarray) -> np.ndarray:
    """min(W+, W-) for every one of the 2^n sign assignments."""
    signs = np.array(list(itertools.product((0.0, 1.0), repeat=ranks.size)))
    w_plus = signs @ ranks
    return np.minimum(w_plus, ranks.sum() - w_plus)


def wilcoxon_signed_rank(diffs: Sequence[float]) -> WilcoxonResult:
    """Zeros dropped, ties midranked, W = min(W+, W-)."""
    d = np.asarray(diffs, dtype=np.float64).ravel()
    if not np.all(np.isfinite(d)):
        raise InputError("paired differences must be finite")
    d = d[d != 0.0]
    if d.size == 0:
        raise AllZeroDifferences("every paired difference is zero")

    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    n = d.size

    if n <= EXACT_MAX_N:
        null = _sign_enumeration(ranks)
        p = float(np.count_nonzero(null <= w + _TIE_SLACK)) / null.size
        return WilcoxonResult(w, min(1.0, p), "exact", n)

    _, tie_counts = np.unique(ranks, return_counts=True)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    z = min(0.0, (w - mean + 0.5) / math.sqrt(var))
    p = min(1.0, float(2.0 * norm.cdf(z)))
    logger.debug(f"Wilcoxon normal approximation: n={n}, W={w}, z={z:.3f}")
    return WilcoxonResult(w, p, "normal_approx", n)


def two_prop_ztest(x1: int, n1: int, x2: int, n2: int) -> ZTestResult:
    """Pooled-variance z test for p1 = p2."""
    for x, n, side in ((x1, n1, "first"), (x2, n2, "second")):
        if n < 1 or not 0 <= x <= n:
            raise InputError(f"{side} proportion needs 0 <= x <= n and n >= 1, got x={x}, n={n}")
    p1, p2 = x1 / n1, x2 / n2
    pooled = (x1 + x2) / (n1 + n2)
    if pooled in (0.0, 1.0):
        raise DegeneratePooled(f"pooled proportion is {pooled}; the z statistic is undefined")
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    z = (p1 - p2) / se
    return ZTestResult(z, float(2.0 * norm.sf(abs(z))), p1, p2)
