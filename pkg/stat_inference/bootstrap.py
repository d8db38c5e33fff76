"""
bootstrap.py — Stratified percentile bootstrap.

Every resample draws from its own generator seeded by (seed, resample index,
attempt), so the interval does not depend on how resamples are spread over
worker threads. Strata are resampled independently and keep their sizes.
"""

import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from tqdm import tqdm

from shared_utils.errors import InputError, NumericalError, RetryCapExceeded

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BootstrapConfig:
    n_resamples: int = 10_000
    level: float = 0.95
    seed: int = 0
    strata: Sequence[Any] | None = None     # per-row stratum labels; None → data.group_index or one stratum
    workers: int = 1
    retry_cap: int = 20
    progress: bool = False

    def __post_init__(self):
        if self.n_resamples < 1:
            raise InputError(f"n_resamples must be positive, got {self.n_resamples}")
        if not 0.0 < self.level < 1.0:
            raise InputError(f"level must lie in (0, 1), got {self.level}")
        if self.seed < 0:
            raise InputError(f"seed must be non-negative, got {self.seed}")
        if self.workers < 1 or self.retry_cap < 1:
            raise InputError("workers and retry_cap must be positive")


@dataclass(frozen=True)
class BootstrapResult:
    point: float
    lo: float
    hi: float
    n_resamples: int
    redrawn: int = 0

    def to_dict(self) -> dict:
        return {"point": self.point, "lo": self.lo, "hi": self.hi}


# ─── Resampling ───────────────────────────────────────────────────────────────

def _strata_rows(data, cfg: BootstrapConfig) -> list[np.ndarray]:
    n = len(data)
    if n == 0:
        raise InputError("cannot bootstrap an empty dataset")
    if cfg.strata is not None:
        labels = np.asarray(cfg.strata)
        if labels.shape[0] != n:
            raise InputError(f"strata has {labels.shape[0]} labels for {n} rows")
    elif hasattr(data, "group_index"):
        labels = data.group_index
    else:
        labels = np.zeros(n, dtype=np.int64)
    _, inverse = np.unique(labels, return_inverse=True)
    return [np.flatnonzero(inverse == s) for s in range(inverse.max() + 1)]


def resample_indices(strata: list[np.ndarray], rng: np.random.Generator) -> np.ndarray:
    return np.concatenate([rows[rng.integers(0, rows.size, rows.size)] for rows in strata])


def _draw(metric: Callable, data, strata, cfg: BootstrapConfig, index: int):
    for attempt in range(cfg.retry_cap):
        rng = np.random.default_rng([cfg.seed, index, attempt])
        sample = data.take(resample_indices(strata, rng))
        try:
            return metric(sample), attempt
        except (InputError, NumericalError, ZeroDivisionError) as exc:
            logger.debug(f"resample {index} attempt {attempt} rejected: {exc}")
    raise RetryCapExceeded(f"resample {index} failed {cfg.retry_cap} times in a row")


def _run(metric: Callable, data, cfg: BootstrapConfig, desc: str) -> tuple[list, int]:
    strata = _strata_rows(data, cfg)
    indices = range(cfg.n_resamples)
    work = functools.partial(_draw, metric, data, strata, cfg)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(tqdm(pool.map(work, indices), total=cfg.n_resamples, desc=desc, disable=not cfg.progress))
    else:
        results = [work(i) for i in tqdm(indices, desc=desc, disable=not cfg.progress)]
    redrawn = sum(1 for _, attempts in results if attempts)
    if redrawn:
        logger.warning(f"{desc}: {redrawn} of {cfg.n_resamples} resamples were redrawn")
    return [value for value, _ in results], redrawn


def percentile_interval(values: np.ndarray, level: float) -> tuple[float, float]:
    """Nearest-rank percentile endpoints; both are order statistics of `values`."""
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(values, [tail, 1.0 - tail], method="inverted_cdf")
    return float(lo), float(hi)


# ─── Public API ───────────────────────────────────────────────────────────────

def bootstrap_ci(metric: Callable[[Any], float], data, cfg: BootstrapConfig = BootstrapConfig()) -> BootstrapResult:
    """Percentile CI of a scalar metric; `data` needs len() and take(indices)."""
    point = float(metric(data))
    values, redrawn = _run(metric, data, cfg, "bootstrap")
    lo, hi = percentile_interval(np.asarray(values, dtype=np.float64), cfg.level)
    return BootstrapResult(point, lo, hi, cfg.n_resamples, redrawn)


def bootstrap_vector(
    metric: Callable[[Any], Mapping[str, float]],
    data,
    cfg: BootstrapConfig = BootstrapConfig(),
) -> dict[str, BootstrapResult | None]:
    """
    One resampling pass for a metric returning named values. A name whose
    value is NaN on some resamples gets its interval from the finite ones;
    names with a NaN point estimate or no finite resample map to None.
    """
    point = dict(metric(data))
    values, redrawn = _run(metric, data, cfg, "bootstrap report")
    out: dict[str, BootstrapResult | None] = {}
    for name, p in point.items():
        column = np.array([float(v.get(name, np.nan)) for v in values], dtype=np.float64)
        column = column[np.isfinite(column)]
        if p is None or not np.isfinite(p) or column.size == 0:
            out[name] = None
            continue
        lo, hi = percentile_interval(column, cfg.level)
        out[name] = BootstrapResult(float(p), lo, hi, int(column.size), redrawn)
    return out
