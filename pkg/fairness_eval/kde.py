"""
kde.py — Gaussian kernel density curves of certainty scores on a fixed grid.

Scores live in [0, 1] but Gaussian kernels leak mass past the padded grid
[-0.1, 1.1]; each curve is divided by the mass the estimate keeps inside the
grid, so every emitted curve integrates to 1 over it.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import norm

from shared_utils.errors import DegenerateBandwidth, InputError, NonPositiveBandwidth

logger = logging.getLogger(__name__)

GRID_RANGE = (-0.1, 1.1)
GRID_POINTS = 201
FALLBACK_BANDWIDTH = 0.01


@dataclass(frozen=True)
class KDECurve:
    x: np.ndarray
    density: np.ndarray
    bandwidth: float
    degenerate: bool        # silverman collapsed and the fallback bandwidth was used
    grid_mass: float        # mass of the untruncated estimate inside the grid range

    def integral(self) -> float:
        return float(trapezoid(self.density, self.x))

    def rows(self):
        return zip(self.x.tolist(), self.density.tolist())


def silverman_bandwidth(scores: np.ndarray) -> float | None:
    """1.06·σ̂·n^(-1/5), or None when the sample has no spread."""
    if scores.size < 2:
        return None
    sigma = float(np.std(scores, ddof=1))
    if sigma == 0.0:
        return None
    return 1.06 * sigma * scores.size ** (-0.2)


def gaussian_kde_density(x, scores, bandwidth: float) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    s = np.asarray(scores, dtype=np.float64)
    z = (x[:, None] - s[None, :]) / bandwidth
    return norm.pdf(z).sum(axis=1) / (s.size * bandwidth)


def kde_curve(
    scores,
    bandwidth: str | float = "silverman",
    grid_points: int = GRID_POINTS,
    grid_range: tuple[float, float] = GRID_RANGE,
) -> KDECurve:
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise InputError("kde_curve needs at least one score")
    degenerate = False
    if bandwidth == "silverman":
        h = silverman_bandwidth(s)
        if h is None:
            warnings.warn(
                f"silverman bandwidth undefined for {s.size} score(s) without spread; using {FALLBACK_BANDWIDTH}",
                DegenerateBandwidth,
                stacklevel=2,
            )
            h, degenerate = FALLBACK_BANDWIDTH, True
    elif isinstance(bandwidth, str):
        raise InputError(f"unknown bandwidth rule {bandwidth!r}")
    else:
        h = float(bandwidth)
        if not h > 0:
            raise NonPositiveBandwidth(f"bandwidth must be positive, got {h}")

    lo, hi = grid_range
    x = np.linspace(lo, hi, grid_points)
    mass = float(np.mean(norm.cdf((hi - s) / h) - norm.cdf((lo - s) / h)))
    if not mass > 0:
        raise InputError(f"no KDE mass inside the grid {grid_range}; scores lie outside it")
    density = gaussian_kde_density(x, s, h) / mass
    logger.debug(f"KDE over {s.size} scores: h={h:.4g}, grid mass {mass:.6f}")
    return KDECurve(x, density, h, degenerate, mass)
