"""
conftest.py — Shared pytest fixtures.
"""

import numpy as np
import pytest

from cohorts_and_splits.synthetic import generate
from fairness_eval.labeled import LabeledScores
from test_scripts.helpers import tiny_spec
from toy_training.trainer import TrainConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def tiny_records():
    return generate(tiny_spec())


@pytest.fixture
def quick_train_config():
    return TrainConfig(epochs=2, batch_size=16, learning_rate=1e-2, d_emb=3, seed=5)


@pytest.fixture
def three_groups():
    """
    Hand-checked scored set (threshold 0.5):
      A: labels 1,1,0,0  scores .9,.4,.3,.6   → tp1 fn1 fp1 tn1
      B: labels 1,1,0,0  scores .8,.7,.1,.2   → tp2 fn0 fp0 tn2
      C: labels 0,0      scores .55,.1        → fp1 tn1 (no positives)
    """
    return LabeledScores.from_rows(
        ids=list(range(10)),
        subgroups=[("A",)] * 4 + [("B",)] * 4 + [("C",)] * 2,
        labels=[1, 1, 0, 0, 1, 1, 0, 0, 0, 0],
        scores=[0.9, 0.4, 0.3, 0.6, 0.8, 0.7, 0.1, 0.2, 0.55, 0.1],
    )
