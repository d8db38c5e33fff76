"""
trainer.py — Desk-scale dual-encoder training, ERM or CMAC-MMD.

The similarity matrix is built in torch so autograd carries ∂L/∂S back to the
two projection matrices; the loss and ∂L/∂S themselves come from the analytic
numpy objectives. Updates use torch's AdamW.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F
from tqdm import tqdm

from embedding_geometry.alignment import ClassPrototypes, SimilarityBatch, class_probabilities
from fairness_eval.labeled import LabeledScores
from fairness_losses.mmd import KernelConfig
from fairness_losses.objectives import BatchAnnotations, LossConfig, total_loss
from shared_utils.errors import InputError, InvalidClassIndex, NonFiniteLoss
from toy_training.batching import make_batches
from toy_training.encoders import DEFAULT_TEMPERATURE, Encoders, init_encoders

logger = logging.getLogger(__name__)

MODES = ("erm", "cmac")
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 1e-5
    weight_decay: float = 5e-5
    lambda_cmac: float = 0.5
    seed: int = 0
    mode: str = "cmac"
    d_emb: int = 8
    temperature: float = DEFAULT_TEMPERATURE
    min_subgroup_batch: int = 2
    kernel: KernelConfig = field(default_factory=KernelConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.epochs < 1 or self.batch_size < 1 or self.d_emb < 1:
            raise InputError("epochs, batch_size and d_emb must be positive")
        if not self.learning_rate > 0:
            raise InputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.weight_decay < 0 or self.lambda_cmac < 0:
            raise InputError("weight_decay and lambda_cmac must be ≥ 0")
        if not 0 <= self.seed < 2**64:
            raise InputError(f"seed must be a non-negative 64-bit integer, got {self.seed}")

    def effective(self) -> "TrainConfig":
        """ERM and CMAC with λ = 0 are the same run; both canonicalise to erm/λ=0."""
        if self.mode == "erm" or self.lambda_cmac == 0:
            return replace(self, mode="erm", lambda_cmac=0.0)
        return self

    def loss_config(self) -> LossConfig:
        return LossConfig(
            lambda_cmac=self.lambda_cmac,
            temperature=self.temperature,
            kernel=self.kernel,
            min_subgroup_batch=self.min_subgroup_batch,
        )


@dataclass(frozen=True)
class EpochLoss:
    epoch: int
    clip: float
    cmac: float
    total: float
    batches: int


@dataclass(frozen=True)
class TrainedModel:
    encoders: Encoders
    class_texts: ClassPrototypes        # text inputs before the text tower
    config: TrainConfig
    history: tuple[EpochLoss, ...] = ()

    @property
    def prototypes(self) -> ClassPrototypes:
        return self.encoders.prototypes(self.class_texts)


def _dataset_arrays(dataset: Sequence, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    if not dataset:
        raise InputError("dataset is empty")
    features = np.stack([np.asarray(r.features, dtype=np.float64) for r in dataset])
    labels = np.asarray([r.label for r in dataset], dtype=np.int64)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise InvalidClassIndex(f"labels must lie in [0, {n_classes}), found {labels.min()}..{labels.max()}")
    return features, labels


def zero_shot_model(d_in: int, class_texts: ClassPrototypes, cfg: TrainConfig) -> TrainedModel:
    """The initialised encoders, before any update."""
    encoders = init_encoders(d_in, cfg.d_emb, cfg.seed, cfg.temperature)
    return TrainedModel(encoders, class_texts, cfg.effective())


def train(dataset: Sequence, class_texts: ClassPrototypes, cfg: TrainConfig = TrainConfig(), progress: bool = False) -> TrainedModel:
    """Fit both towers; (dataset, class_texts, cfg) fully determine the result."""
    cfg = cfg.effective()
    features, labels = _dataset_arrays(dataset, class_texts.n_classes)
    if len(dataset) < 2:
        raise InputError("training needs at least 2 samples")
    if features.shape[1] != class_texts.dim:
        raise InputError(f"feature dim {features.shape[1]} != class text dim {class_texts.dim}")
    subgroups = [r.subgroup for r in dataset]
    loss_cfg = cfg.loss_config()
    tau = cfg.temperature

    start = init_encoders(features.shape[1], cfg.d_emb, cfg.seed, tau)
    w_img = torch.tensor(start.image_weights, dtype=torch.float64, requires_grad=True)
    w_txt = torch.tensor(start.text_weights, dtype=torch.float64, requires_grad=True)
    optimizer = torch.optim.AdamW(
        [w_img, w_txt], lr=cfg.learning_rate, betas=ADAM_BETAS, eps=ADAM_EPS, weight_decay=cfg.weight_decay
    )
    x_all = torch.from_numpy(features)
    t_all = torch.from_numpy(class_texts.class_texts)
    y_all = torch.from_numpy(labels)

    logger.info(
        f"Training {cfg.mode} (λ={cfg.lambda_cmac}) on {len(dataset)} samples: "
        f"{cfg.epochs} epochs, batch {cfg.batch_size}, lr {cfg.learning_rate}, seed {cfg.seed}"
    )
    history: list[EpochLoss] = []
    for epoch in tqdm(range(1, cfg.epochs + 1), desc=f"train {cfg.mode}", disable=not progress):
        plan = make_batches(dataset, cfg.batch_size, [cfg.seed, epoch], cfg.min_subgroup_batch, warn=epoch == 1)
        clips, cmacs, totals = [], [], []
        for b, idx in enumerate(plan):
            if idx.size < 2:
                continue
            rows = torch.from_numpy(idx)
            z_img = F.normalize(x_all[rows] @ w_img, dim=1)
            z_txt = F.normalize(t_all @ w_txt, dim=1)[y_all[rows]]
            sim = z_img @ z_txt.T / tau

            batch_labels = labels[idx]
            breakdown = total_loss(
                SimilarityBatch(sim.detach().numpy().copy(), tau),
                BatchAnnotations([subgroups[i] for i in idx]),
                loss_cfg,
                distractor_mask=batch_labels[:, None] != batch_labels[None, :],
            )
            if not (np.isfinite(breakdown.total) and np.all(np.isfinite(breakdown.grad))):
                raise NonFiniteLoss(
                    f"non-finite loss at epoch {epoch}, batch {b} (clip={breakdown.clip}, cmac={breakdown.cmac})",
                    epoch=epoch,
                    batch=b,
                )
            optimizer.zero_grad()
            sim.backward(torch.from_numpy(breakdown.grad))
            optimizer.step()

            clips.append(breakdown.clip)
            cmacs.append(breakdown.cmac)
            totals.append(breakdown.total)
            logger.debug(f"epoch {epoch} batch {b}: n={idx.size} total={breakdown.total:.6f}")

        entry = EpochLoss(epoch, float(np.mean(clips)), float(np.mean(cmacs)), float(np.mean(totals)), len(totals))
        history.append(entry)
        logger.info(f"epoch {epoch}/{cfg.epochs}: clip={entry.clip:.5f} cmac={entry.cmac:.5f} total={entry.total:.5f}")

    encoders = Encoders(w_img.detach().numpy().copy(), w_txt.detach().numpy().copy(), tau)
    return TrainedModel(encoders, class_texts, cfg, tuple(history))


def evaluate_model(model: TrainedModel, dataset: Sequence, positive_class: int = 1) -> LabeledScores:
    """
    Score every row from its features alone; subgroups ride along for grouping.
    Multiclass models are binarised one-vs-rest around `positive_class`.
    """
    prototypes = model.prototypes
    if not 0 <= positive_class < prototypes.n_classes:
        raise InvalidClassIndex(f"positive_class {positive_class} outside [0, {prototypes.n_classes})")
    features, labels = _dataset_arrays(dataset, prototypes.n_classes)
    images = model.encoders.encode_images(features)
    probs = class_probabilities(images, prototypes, model.encoders.temperature)
    scores = np.clip(probs[:, positive_class], 0.0, 1.0)
    predicted = None
    if prototypes.n_classes > 2:
        predicted = (np.argmax(probs, axis=1) == positive_class).astype(np.int64)
    return LabeledScores.from_rows(
        ids=[r.id for r in dataset],
        subgroups=[r.subgroup for r in dataset],
        labels=(labels == positive_class).astype(np.int64),
        scores=scores,
        predicted=predicted,
    )
