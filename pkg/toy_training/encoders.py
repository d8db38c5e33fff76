"""
encoders.py — Linear dual encoders with l2-normalised outputs.

Both towers read the same input dimension: images are cohort feature vectors,
texts are fixed per-class "sentence" vectors standing in for the structured
diagnostic prompts.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from embedding_geometry.alignment import ClassPrototypes
from shared_utils.errors import DimensionMismatch, InputError

DEFAULT_TEMPERATURE = 0.07


@dataclass(frozen=True)
class Encoders:
    image_weights: np.ndarray       # d_in × d_emb
    text_weights: np.ndarray        # d_in × d_emb
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        img = np.asarray(self.image_weights, dtype=np.float64)
        txt = np.asarray(self.text_weights, dtype=np.float64)
        if img.ndim != 2 or img.shape != txt.shape:
            raise DimensionMismatch(f"encoder weight shapes differ: {img.shape} vs {txt.shape}")
        if not (np.all(np.isfinite(img)) and np.all(np.isfinite(txt))):
            raise InputError("encoder weights must be finite")
        if not self.temperature > 0:
            raise InputError(f"temperature must be > 0, got {self.temperature}")
        object.__setattr__(self, "image_weights", img)
        object.__setattr__(self, "text_weights", txt)

    @property
    def d_in(self) -> int:
        return int(self.image_weights.shape[0])

    @property
    def d_emb(self) -> int:
        return int(self.image_weights.shape[1])

    def encode_images(self, features) -> np.ndarray:
        return _project(features, self.image_weights)

    def encode_texts(self, texts) -> np.ndarray:
        return _project(texts, self.text_weights)

    def prototypes(self, class_texts: ClassPrototypes) -> ClassPrototypes:
        """Class text inputs pushed through the text tower."""
        return ClassPrototypes(self.encode_texts(class_texts.class_texts))


def _project(x, weights: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != weights.shape[0]:
        raise DimensionMismatch(f"input dim {x.shape[1]} != encoder input dim {weights.shape[0]}")
    # torch's normalize keeps the train-time and eval-time projections identical
    with torch.no_grad():
        z = F.normalize(torch.from_numpy(x) @ torch.from_numpy(weights), dim=1)
    return z.numpy()


def init_encoders(d_in: int, d_emb: int, seed: int, temperature: float = DEFAULT_TEMPERATURE) -> Encoders:
    """Weights ~ N(0, 1/d_in); the image tower uses the first draws of `seed`'s stream."""
    if d_in < 1 or d_emb < 1:
        raise InputError(f"encoder dims must be ≥ 1, got d_in={d_in}, d_emb={d_emb}")
    rng = np.random.default_rng(seed)
    scale = 1.0 / math.sqrt(d_in)
    image = rng.normal(0.0, scale, size=(d_in, d_emb))
    text = rng.normal(0.0, scale, size=(d_in, d_emb))
    return Encoders(image, text, temperature)


def class_text_inputs(n_classes: int, d_in: int, seed: int) -> ClassPrototypes:
    """Fixed unit "sentence" vectors, one per class, from their own seed stream."""
    if n_classes < 2:
        raise InputError("at least two classes are required")
    rng = np.random.default_rng([seed, 1])
    texts = rng.normal(size=(n_classes, d_in))
    return ClassPrototypes(texts / np.linalg.norm(texts, axis=1, keepdims=True))
