"""
objectives.py — Training objectives with gradients w.r.t. the similarity matrix.

  L_CLIP  symmetric InfoNCE over rows and columns of S
  L_CMAC  mean biased MMD² over every pair of eligible subgroups' margins
  L_total L_CLIP + λ·L_CMAC, the CMAC part routed back to S through
          a_i = S_ii − S_{i, j*(i)}
"""

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from embedding_geometry.alignment import SimilarityBatch, alignment_scores, best_distractors
from fairness_losses.mmd import KernelConfig, mmd2, mmd2_grad, resolve_bandwidth
from shared_utils.errors import BatchTooSmall, InputError, LengthMismatch


@dataclass(frozen=True)
class LossConfig:
    lambda_cmac: float = 0.5
    temperature: float = 0.07
    kernel: KernelConfig = field(default_factory=KernelConfig)
    min_subgroup_batch: int = 2

    def __post_init__(self):
        if self.lambda_cmac < 0:
            raise InputError(f"lambda_cmac must be ≥ 0, got {self.lambda_cmac}")
        if not self.temperature > 0:
            raise InputError(f"temperature must be > 0, got {self.temperature}")
        if self.min_subgroup_batch < 1:
            raise InputError(f"min_subgroup_batch must be ≥ 1, got {self.min_subgroup_batch}")
        if self.kernel.estimator != "biased":
            raise InputError("the loss path uses the biased MMD² estimator only")


@dataclass(frozen=True)
class BatchAnnotations:
    """Subgroup of every batch index (attributes are used by the loss only)."""
    subgroup_of: tuple

    def __post_init__(self):
        object.__setattr__(self, "subgroup_of", tuple(self.subgroup_of))

    def __len__(self) -> int:
        return len(self.subgroup_of)

    def members(self) -> dict[Hashable, np.ndarray]:
        out: dict[Hashable, list[int]] = {}
        for i, g in enumerate(self.subgroup_of):
            out.setdefault(g, []).append(i)
        return {g: np.asarray(idx) for g, idx in sorted(out.items(), key=lambda kv: str(kv[0]))}


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    clip: float
    cmac: float
    grad: np.ndarray          # ∂L_total/∂S
    alignment: np.ndarray     # a_i used by the CMAC term


def clip_loss(batch: SimilarityBatch) -> tuple[float, np.ndarray]:
    S = batch.matrix
    n = batch.n
    diag = np.diag(S)
    ce_rows = logsumexp(S, axis=1) - diag
    ce_cols = logsumexp(S, axis=0) - diag
    loss = 0.5 * (ce_rows.mean() + ce_cols.mean())
    eye = np.eye(n)
    grad = 0.5 * ((softmax(S, axis=1) - eye) / n + (softmax(S, axis=0) - eye) / n)
    return float(loss), grad


def cmac_loss(
    scores: Sequence[float],
    groups: BatchAnnotations,
    cfg: LossConfig = LossConfig(),
) -> tuple[float, np.ndarray]:
    a = np.asarray(scores, dtype=np.float64).ravel()
    if a.size != len(groups):
        raise LengthMismatch(f"{a.size} scores vs {len(groups)} subgroup annotations")
    grad = np.zeros_like(a)
    eligible = {g: idx for g, idx in groups.members().items() if idx.size >= cfg.min_subgroup_batch}
    if len(eligible) < 2:
        return 0.0, grad

    h = resolve_bandwidth(cfg.kernel, *(a[idx] for idx in eligible.values()))
    pairs = list(itertools.combinations(eligible.values(), 2))
    total = 0.0
    for gi, gj in pairs:
        total += mmd2(a[gi], a[gj], cfg.kernel, bandwidth=h)
        dx, dy = mmd2_grad(a[gi], a[gj], cfg.kernel, bandwidth=h)
        grad[gi] += dx
        grad[gj] += dy
    return total / len(pairs), grad / len(pairs)


def total_loss(
    batch: SimilarityBatch,
    groups: BatchAnnotations,
    cfg: LossConfig = LossConfig(),
    distractor_mask: np.ndarray | None = None,
) -> LossBreakdown:
    if batch.n < 2:
        raise BatchTooSmall(f"total loss needs a batch of ≥ 2, got {batch.n}")
    if len(groups) != batch.n:
        raise LengthMismatch(f"{len(groups)} annotations for a batch of {batch.n}")

    clip, grad_clip = clip_loss(batch)
    a = alignment_scores(batch, distractor_mask)
    cmac, grad_a = cmac_loss(a, groups, cfg)

    if cfg.lambda_cmac == 0:
        return LossBreakdown(total=clip, clip=clip, cmac=cmac, grad=grad_clip, alignment=a)

    # route ∂L/∂a_i onto S_ii (+) and the chosen distractor S_ij* (−)
    rows = np.arange(batch.n)
    j_star = best_distractors(batch, distractor_mask)
    grad_s = np.zeros_like(batch.matrix)
    grad_s[rows, rows] += grad_a
    grad_s[rows, j_star] -= grad_a
    return LossBreakdown(
        total=clip + cfg.lambda_cmac * cmac,
        clip=clip,
        cmac=cmac,
        grad=grad_clip + cfg.lambda_cmac * grad_s,
        alignment=a,
    )
