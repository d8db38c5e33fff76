#!/usr/bin/env python3
"""
alignment.py — Cosine geometry of the shared image/text embedding space.

Two families of scores live here and are never mixed:
  • batch-relative margins   a_i = S_ii − max_{j≠i} S_ij      (training loss)
  • class-relative certainty c_i = softmax over class texts    (evaluation)

All functions are pure; inputs are l2-normalised vectors (re-normalised when
within NORM_TOLERANCE of unit length, rejected otherwise).
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import softmax

from shared_utils.errors import (
    BatchTooSmall,
    DimensionMismatch,
    InvalidClassIndex,
    NonPositiveTemperature,
    NonUnitNorm,
)

NORM_TOLERANCE = 1e-4


def as_unit_rows(vectors, name: str = "vectors") -> np.ndarray:
    """Stack vectors into a float64 matrix and snap rows onto the unit sphere."""
    arr = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DimensionMismatch(f"{name}: expected a non-empty list of vectors")
    norms = np.linalg.norm(arr, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)
    if bad.size:
        raise NonUnitNorm(f"{name}[{bad[0]}] has norm {norms[bad[0]]:.6g}; expected 1 ± {NORM_TOLERANCE}")
    return arr / norms[:, None]


def _check_temperature(temperature: float) -> float:
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    return float(temperature)


@dataclass(frozen=True)
class EmbeddingPair:
    image_vec: np.ndarray
    text_vec: np.ndarray

    def __post_init__(self):
        img = as_unit_rows(self.image_vec, "image_vec")[0]
        txt = as_unit_rows(self.text_vec, "text_vec")[0]
        if img.shape != txt.shape:
            raise DimensionMismatch(f"image dim {img.shape[0]} != text dim {txt.shape[0]}")
        object.__setattr__(self, "image_vec", img)
        object.__setattr__(self, "text_vec", txt)

    @property
    def dim(self) -> int:
        return int(self.image_vec.shape[0])


@dataclass(frozen=True)
class SimilarityBatch:
    matrix: np.ndarray
    temperature: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionMismatch(f"similarity matrix must be square n×n with n ≥ 1, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "temperature", _check_temperature(self.temperature))

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(frozen=True)
class ClassPrototypes:
    """Unit text vectors, one per diagnostic class, in canonical label order."""
    class_texts: np.ndarray

    def __post_init__(self):
        texts = as_unit_rows(self.class_texts, "class_texts")
        if texts.shape[0] < 2:
            raise InvalidClassIndex("at least two diagnostic classes are required")
        object.__setattr__(self, "class_texts", texts)

    @property
    def n_classes(self) -> int:
        return int(self.class_texts.shape[0])

    @property
    def dim(self) -> int:
        return int(self.class_texts.shape[1])


def similarity_batch(images: Sequence, texts: Sequence, temperature: float) -> SimilarityBatch:
    """S_ij = ⟨image_i, text_j⟩ / τ."""
    tau = _check_temperature(temperature)
    img = as_unit_rows(images, "images")
    txt = as_unit_rows(texts, "texts")
    if img.shape[0] != txt.shape[0]:
        raise DimensionMismatch(f"{img.shape[0]} images vs {txt.shape[0]} texts")
    if img.shape[1] != txt.shape[1]:
        raise DimensionMismatch(f"image dim {img.shape[1]} != text dim {txt.shape[1]}")
    return SimilarityBatch(matrix=img @ txt.T / tau, temperature=tau)


def best_distractors(batch: SimilarityBatch, distractor_mask: np.ndarray | None = None) -> np.ndarray:
    """Column index of the strongest distractor per row; ties go to the lowest index.

    `distractor_mask[i, j]` marks column j as an admissible distractor for row i.
    The diagonal is never admissible. A row whose mask admits nothing falls back
    to every j ≠ i.
    """
    n = batch.n
    if n < 2:
        raise BatchTooSmall(f"alignment scores need n ≥ 2, got {n}")
    off_diag = ~np.eye(n, dtype=bool)
    if distractor_mask is None:
        allowed = off_diag
    else:
        mask = np.asarray(distractor_mask, dtype=bool)
        if mask.shape != (n, n):
            raise DimensionMismatch(f"distractor mask shape {mask.shape} != {(n, n)}")
        allowed = mask & off_diag
        empty = ~allowed.any(axis=1)
        allowed[empty] = off_diag[empty]
    masked = np.where(allowed, batch.matrix, -np.inf)
    return np.argmax(masked, axis=1)


def alignment_scores(batch: SimilarityBatch, distractor_mask: np.ndarray | None = None) -> np.ndarray:
    """a_i = S_ii − max_{j≠i} S_ij."""
    rows = np.arange(batch.n)
    j_star = best_distractors(batch, distractor_mask)
    return batch.matrix[rows, rows] - batch.matrix[rows, j_star]


def class_logits(images: Sequence, prototypes: ClassPrototypes, temperature: float) -> np.ndarray:
    tau = _check_temperature(temperature)
    img = as_unit_rows(images, "images")
    if img.shape[1] != prototypes.dim:
        raise DimensionMismatch(f"image dim {img.shape[1]} != prototype dim {prototypes.dim}")
    return img @ prototypes.class_texts.T / tau


def class_probabilities(images: Sequence, prototypes: ClassPrototypes, temperature: float) -> np.ndarray:
    """Row-wise softmax over class prototypes; each row sums to 1."""
    return softmax(class_logits(images, prototypes, temperature), axis=1)


def certainty_scores(
    images: Sequence,
    prototypes: ClassPrototypes,
    correct_class: Sequence[int],
    temperature: float,
) -> np.ndarray:
    """Softmax-calibrated probability of each sample's correct class."""
    probs = class_probabilities(images, prototypes, temperature)
    idx = np.asarray(correct_class)
    if idx.shape != (probs.shape[0],):
        raise DimensionMismatch(f"{idx.shape[0] if idx.ndim else 1} class indices for {probs.shape[0]} images")
    if not np.issubdtype(idx.dtype, np.integer) or idx.min() < 0 or idx.max() >= prototypes.n_classes:
        raise InvalidClassIndex(f"class indices must be integers in [0, {prototypes.n_classes})")
    return probs[np.arange(probs.shape[0]), idx]


def predict_labels(images: Sequence, prototypes: ClassPrototypes, temperature: float) -> np.ndarray:
    """Argmax over class similarities, ties broken toward the lowest class index."""
    return np.argmax(class_logits(images, prototypes, temperature), axis=1)
