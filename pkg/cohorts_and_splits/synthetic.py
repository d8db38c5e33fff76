#!/usr/bin/env python3
"""
synthetic.py — Imbalanced multimodal cohorts with planted certainty gaps.

Classes sit symmetrically about a subgroup centre o_g: a sample with label y
is drawn around o_g + (y − ½)·σ·(s_g·u + r_g·v_g), where u is the cohort-wide
disease direction, s_g the subgroup's `separation` along it (class-mean
distance in units of noise σ), and v_g a private direction carrying the
subgroup's `atypical` presentation r_g. Noise is isotropic, so v_g is pure
noise for every other subgroup. Offsets o_g are projected off u and every
v_g; a subgroup's identity never moves its class scores.

Low-separation subgroups are the ones a model ends up uncertain about.
"""

import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from shared_utils.errors import EmptySpec, InputError
from shared_utils.subgroups import SubgroupKey

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubgroupSpec:
    key: SubgroupKey
    n: int
    prevalence: float
    separation: float
    atypical: float = 0.0

    def __post_init__(self):
        if not isinstance(self.key, SubgroupKey):
            object.__setattr__(self, "key", SubgroupKey(tuple(self.key)))
        if self.n < 0:
            raise InputError(f"{self.key}: n must be ≥ 0, got {self.n}")
        if not 0.0 <= self.prevalence <= 1.0:
            raise InputError(f"{self.key}: prevalence must be in [0, 1], got {self.prevalence}")
        for name in ("separation", "atypical"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InputError(f"{self.key}: {name} must be finite and ≥ 0, got {value}")

    @property
    def positives(self) -> int:
        """Prevalence × n rounded half-up."""
        exact = Decimal(self.n) * Decimal(repr(self.prevalence))
        return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class CohortSpec:
    subgroups: tuple[SubgroupSpec, ...]
    attribute_names: tuple[str, ...] = ("gender", "age")
    d_in: int = 16
    noise_sigma: float = 1.0
    offset_scale: float = 0.5
    seed: int = 0
    name: str = "custom"
    direction_seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "subgroups", tuple(self.subgroups))
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        if not self.subgroups or sum(s.n for s in self.subgroups) < 1:
            raise EmptySpec("cohort spec has no samples")
        keys = [s.key for s in self.subgroups]
        if len(set(keys)) != len(keys):
            raise InputError("cohort spec lists the same subgroup twice")
        for s in self.subgroups:
            if len(s.key.values) != len(self.attribute_names):
                raise InputError(f"{s.key}: expected {len(self.attribute_names)} attribute values")
        if self.d_in < 1 + self.n_atypical:
            raise InputError(
                f"d_in must be ≥ {1 + self.n_atypical} (disease direction + one per atypical subgroup), got {self.d_in}"
            )
        if not self.noise_sigma > 0:
            raise InputError(f"noise_sigma must be > 0, got {self.noise_sigma}")
        if self.offset_scale < 0:
            raise InputError(f"offset_scale must be ≥ 0, got {self.offset_scale}")

    @property
    def total(self) -> int:
        return sum(s.n for s in self.subgroups)

    @property
    def n_atypical(self) -> int:
        return sum(1 for s in self.subgroups if s.atypical > 0)


@dataclass(frozen=True)
class SampleRecord:
    id: int
    features: np.ndarray = field(repr=False)
    label: int
    subgroup: SubgroupKey


def signal_directions(spec: CohortSpec) -> np.ndarray:
    """
    Orthonormal rows: the disease direction u first, then one private
    direction per atypical subgroup in spec order.

    Drawn from their own stream, so cohorts sharing `direction_seed` and
    atypical layout share every direction.
    """
    base = spec.seed if spec.direction_seed is None else spec.direction_seed
    raw = np.random.default_rng([base, 0]).normal(size=(spec.d_in, 1 + spec.n_atypical))
    q, _ = np.linalg.qr(raw)
    return q.T


def generate(spec: CohortSpec) -> list[SampleRecord]:
    """Draw the cohort; a pure function of `spec` (seed included)."""
    rng = np.random.default_rng(spec.seed)
    sigma = spec.noise_sigma
    basis = signal_directions(spec)
    disease, private = basis[0], iter(basis[1:])

    records: list[SampleRecord] = []
    next_id = 0
    for sub in spec.subgroups:
        offset = rng.normal(0.0, spec.offset_scale * sigma, size=spec.d_in)
        offset -= basis.T @ (basis @ offset)
        signal = sub.separation * disease
        if sub.atypical > 0:
            signal = signal + sub.atypical * next(private)

        n_pos = sub.positives
        labels = rng.permutation(np.r_[np.ones(n_pos, dtype=int), np.zeros(sub.n - n_pos, dtype=int)])
        noise = rng.normal(0.0, sigma, size=(sub.n, spec.d_in))
        feats = offset + (labels[:, None] - 0.5) * sigma * signal + noise
        for x, y in zip(feats, labels):
            records.append(SampleRecord(id=next_id, features=x, label=int(y), subgroup=sub.key))
            next_id += 1
        logger.debug(f"{sub.key}: n={sub.n} positives={n_pos} separation={sub.separation} atypical={sub.atypical}")

    logger.info(f"Generated cohort '{spec.name}': {len(records)} records, {len(spec.subgroups)} subgroups")
    return records
