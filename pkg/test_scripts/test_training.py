"""
test_training.py — Toy dual encoders, subgroup-aware batching and the trainer.
"""

import dataclasses
import warnings

import numpy as np
import pytest

import toy_training.trainer as trainer_module
from cohorts_and_splits.synthetic import CohortSpec, SubgroupSpec, generate
from embedding_geometry.alignment import class_probabilities
from fairness_eval.metrics import uncertainty_zone_fraction
from fairness_losses.mmd import KernelConfig
from fairness_losses.objectives import LossBreakdown
from files_and_config.checkpoint import checkpoint_dict
from shared_utils.errors import InfeasibleStratification, InputError, NonFiniteLoss
from shared_utils.subgroups import SubgroupKey
from test_scripts.helpers import tiny_spec
from toy_training.batching import make_batches
from toy_training.encoders import class_text_inputs, init_encoders
from toy_training.trainer import TrainConfig, evaluate_model, train, zero_shot_model


@pytest.fixture
def class_texts(tiny_records):
    return class_text_inputs(2, len(tiny_records[0].features), seed=5)


class TestEncoders:

    def test_init_is_deterministic(self):
        a, b = init_encoders(4, 3, seed=11), init_encoders(4, 3, seed=11)
        np.testing.assert_array_equal(a.image_weights, b.image_weights)
        np.testing.assert_array_equal(a.text_weights, b.text_weights)
        assert a.image_weights.shape == (4, 3)

    def test_outputs_are_unit_rows(self, rng):
        enc = init_encoders(4, 3, seed=1)
        z = enc.encode_images(rng.normal(size=(5, 4)))
        np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0)

    def test_class_texts(self):
        texts = class_text_inputs(3, 4, seed=0)
        assert texts.n_classes == 3
        np.testing.assert_allclose(np.linalg.norm(texts.class_texts, axis=1), 1.0)
        with pytest.raises(InputError):
            class_text_inputs(1, 4, seed=0)


class TestBatching:

    def test_partition_covers_every_row_once(self, tiny_records):
        plan = make_batches(tiny_records, 16, seed=[0, 1])
        everything = np.sort(np.concatenate(plan.batches))
        np.testing.assert_array_equal(everything, np.arange(len(tiny_records)))
        assert plan.stratification_ok

    def test_batches_mix_subgroups(self, tiny_records):
        plan = make_batches(tiny_records, 16, seed=[0, 1])
        for idx in plan:
            assert len({tiny_records[i].subgroup for i in idx}) == 2
            assert idx.size >= 4

    def test_same_seed_same_plan(self, tiny_records):
        a = make_batches(tiny_records, 16, seed=[3, 1])
        b = make_batches(tiny_records, 16, seed=[3, 1])
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_single_subgroup_warns(self, tiny_records):
        one = [r for r in tiny_records if r.subgroup == tiny_records[0].subgroup]
        with pytest.warns(InfeasibleStratification):
            plan = make_batches(one, 8, seed=0)
        assert not plan.stratification_ok

    def test_warning_can_be_silenced(self, tiny_records):
        one = [r for r in tiny_records if r.subgroup == tiny_records[0].subgroup]
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            plan = make_batches(one, 8, seed=0, warn=False)
        assert not plan.stratification_ok

    def test_batch_must_hold_two_subgroup_chunks(self, tiny_records):
        with pytest.raises(InputError):
            make_batches(tiny_records, 3, seed=0, min_subgroup_batch=2)


class TestTrainer:

    def test_deterministic(self, tiny_records, class_texts, quick_train_config):
        a = train(tiny_records, class_texts, quick_train_config)
        b = train(tiny_records, class_texts, quick_train_config)
        np.testing.assert_array_equal(a.encoders.image_weights, b.encoders.image_weights)
        np.testing.assert_array_equal(a.encoders.text_weights, b.encoders.text_weights)
        assert a.history == b.history

    def test_cmac_with_zero_lambda_is_erm(self, tiny_records, class_texts, quick_train_config):
        erm = train(tiny_records, class_texts, dataclasses.replace(quick_train_config, mode="erm"))
        cmac0 = train(tiny_records, class_texts, dataclasses.replace(quick_train_config, mode="cmac", lambda_cmac=0.0))
        assert checkpoint_dict(erm) == checkpoint_dict(cmac0)
        assert cmac0.config.mode == "erm"

    def test_fairness_term_changes_the_model(self, tiny_records, class_texts, quick_train_config):
        erm = train(tiny_records, class_texts, dataclasses.replace(quick_train_config, mode="erm"))
        cmac = train(tiny_records, class_texts, dataclasses.replace(quick_train_config, lambda_cmac=2.0))
        assert not np.array_equal(erm.encoders.image_weights, cmac.encoders.image_weights)
        assert all(h.cmac >= -1e-12 for h in cmac.history)

    def test_contrastive_loss_decreases(self):
        records = generate(dataclasses.replace(tiny_spec(n=32), seed=9))
        texts = class_text_inputs(2, 4, seed=0)
        cfg = TrainConfig(epochs=30, batch_size=64, learning_rate=1e-2, mode="erm", d_emb=3, seed=0)
        model = train(records, texts, cfg)
        assert model.history[-1].clip < model.history[0].clip
        assert all(h.batches == 1 for h in model.history)

    def test_cmac_objective_decreases(self):
        records = generate(dataclasses.replace(tiny_spec(n=32), seed=9))
        texts = class_text_inputs(2, 4, seed=0)
        cfg = TrainConfig(epochs=2, batch_size=64, learning_rate=1e-3, mode="cmac", lambda_cmac=0.5,
                          temperature=0.5, d_emb=3, seed=0, kernel=KernelConfig.fixed(1.0))
        model = train(records, texts, cfg)
        assert len(records) == 64
        assert [h.batches for h in model.history] == [1, 1]
        assert model.history[0].cmac > 0
        assert model.history[1].total <= model.history[0].total

    def test_infeasible_stratification_warns_once_per_run(self, tiny_records, class_texts):
        one = [r for r in tiny_records if r.subgroup == tiny_records[0].subgroup]
        cfg = TrainConfig(epochs=3, batch_size=8, learning_rate=1e-2, d_emb=3, seed=1)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            model = train(one, class_texts, cfg)
        assert len(model.history) == 3
        assert sum(issubclass(w.category, InfeasibleStratification) for w in caught) == 1

    def test_non_finite_loss_reports_position(self, tiny_records, class_texts, quick_train_config, monkeypatch):
        def broken(batch, groups, cfg, distractor_mask=None):
            n = batch.n
            return LossBreakdown(np.nan, np.nan, 0.0, np.zeros((n, n)), np.zeros(n))

        monkeypatch.setattr(trainer_module, "total_loss", broken)
        with pytest.raises(NonFiniteLoss) as info:
            train(tiny_records, class_texts, quick_train_config)
        assert (info.value.epoch, info.value.batch) == (1, 0)

    def test_rejects_bad_config(self):
        with pytest.raises(InputError):
            TrainConfig(mode="fair")
        with pytest.raises(InputError):
            TrainConfig(lambda_cmac=-1.0)

    def test_needs_two_samples(self, tiny_records, class_texts, quick_train_config):
        with pytest.raises(InputError):
            train(tiny_records[:1], class_texts, quick_train_config)


class TestEvaluateModel:

    @pytest.fixture
    def model(self, tiny_records, class_texts, quick_train_config):
        return train(tiny_records, class_texts, quick_train_config)

    def test_scores_are_positive_class_probability(self, model, tiny_records):
        data = evaluate_model(model, tiny_records)
        features = np.stack([r.features for r in tiny_records])
        probs = class_probabilities(model.encoders.encode_images(features), model.prototypes, model.encoders.temperature)
        np.testing.assert_allclose(data.scores, probs[:, 1])
        np.testing.assert_array_equal(data.ids, [r.id for r in tiny_records])
        np.testing.assert_array_equal(data.labels, [r.label for r in tiny_records])
        assert data.predicted is None

    def test_subgroup_never_influences_scores(self, model, tiny_records):
        relabelled = [dataclasses.replace(r, subgroup=SubgroupKey(("x", "y"))) for r in tiny_records]
        a = evaluate_model(model, tiny_records)
        b = evaluate_model(model, relabelled)
        np.testing.assert_array_equal(a.scores, b.scores)

    def test_zero_shot_model_uses_initial_weights(self, tiny_records, class_texts, quick_train_config):
        model = zero_shot_model(4, class_texts, quick_train_config)
        start = init_encoders(4, quick_train_config.d_emb, quick_train_config.seed, quick_train_config.temperature)
        np.testing.assert_array_equal(model.encoders.image_weights, start.image_weights)
        assert model.history == ()


class TestPlantedCertaintyGap:

    @staticmethod
    def _zone_fractions(seed: int) -> dict:
        spec = CohortSpec(
            subgroups=(
                SubgroupSpec(SubgroupKey(("female", "young")), 500, 0.4, 0.8),
                SubgroupSpec(SubgroupKey(("male", "old")), 500, 0.4, 3.0),
            ),
            d_in=8,
            seed=seed,
            name="gap",
        )
        records = generate(spec)
        cfg = TrainConfig(epochs=15, batch_size=64, learning_rate=1e-2, mode="erm", temperature=0.5, d_emb=4, seed=seed)
        model = train(records, class_text_inputs(2, spec.d_in, seed), cfg)
        zone = uncertainty_zone_fraction(evaluate_model(model, records))
        return {k.label: v for k, v in zone.items()}

    def test_lower_separation_leaves_more_scores_uncertain(self):
        wins = []
        for seed in (1, 2, 3):
            zone = self._zone_fractions(seed)
            wins.append(zone["female|young"] > zone["male|old"])
        assert sum(wins) >= 2, wins
