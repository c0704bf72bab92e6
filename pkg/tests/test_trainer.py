"""M4 trainer: variant 선택, conclusion 승격, 반복 학습 루프, checkpoint / resume"""
import json
from unittest.mock import MagicMock, patch

import numpy as np
import pytest
from pydantic import ValidationError

from config.schemas import SynthConfig, TrainingConfig
from modules.errors import ConfigError
from modules.m1_kg_core import Triple
from modules.m2_rule_engine import ConclusionSet, ConclusionState, HornRule, ground_rules
from modules.m4_trainer import (
    IterationState, describe_variant, filter_conclusions, promote_top_n, rule_mean_scores, run_training,
    top_n_count, variant_selector,
)
from modules.m4_trainer.trainer import CHECKPOINT_FILE, EPOCH_LOG_FILE, TRAINER_STATE_FILE, _make_batches
from modules.m6_synth import generate

QUIET = dict(logger=lambda msg: None)


@pytest.fixture(scope="module")
def synthetic():
    return generate(SynthConfig(entity_count=40, pairs_per_rule=30, noise_triples=20, seed=0))


def state_with_candidates(*groups: list) -> IterationState:
    cs = ConclusionSet()
    for rid, triples in enumerate(groups):
        cs.add_group(rid, triples)
    return IterationState(conclusions=cs)


def scoring_mock(values: dict) -> MagicMock:
    """triple → 고정 점수 / 확률을 돌려주는 모델 대역"""
    model = MagicMock()
    model.probability.side_effect = lambda arr: np.array([values[tuple(t)] for t in np.asarray(arr).tolist()])
    model.score.side_effect = lambda arr: np.array([values[tuple(t)] for t in np.asarray(arr).tolist()])
    return model


# ─── variant_selector ─────────────────────────────────────────

class TestVariantSelector:
    def test_default_is_full_method(self):
        config = variant_selector(TrainingConfig())
        assert config.nne_enabled and config.l2_enabled and config.iterative_enabled
        assert config.dc_loss_enabled and config.rc_loss_enabled
        assert config.conclusion_label_mode == "rule_losses"
        assert describe_variant(config) == "complex+IL"

    def test_ablations_map_to_flags(self):
        config = variant_selector(TrainingConfig(ablations="no_nne, no_l2,no_il"))
        assert not config.nne_enabled
        assert not config.l2_enabled
        assert not config.iterative_enabled
        assert describe_variant(config) == "complex w/o NNE, l2"

    @pytest.mark.parametrize("name,field,value", [
        ("no_dc", "dc_loss_enabled", False),
        ("no_rc", "rc_loss_enabled", False),
        ("ac", "conclusion_label_mode", "all_positive"),
        ("wc", "conclusion_label_mode", "weighted"),
        ("top_n", "promotion_mode", "top_n"),
    ])
    def test_single_variant(self, name, field, value):
        assert getattr(variant_selector(TrainingConfig(ablations=(name,))), field) == value

    def test_ac_and_wc_are_exclusive(self):
        with pytest.raises(ConfigError):
            variant_selector(TrainingConfig(ablations=("ac", "wc")))

    def test_conflicting_label_mode(self):
        with pytest.raises(ConfigError):
            variant_selector(TrainingConfig(conclusion_label_mode="weighted", ablations=("ac",)))

    def test_unknown_variant(self):
        with pytest.raises(ValidationError):
            TrainingConfig(ablations=("no_everything",))

    def test_input_not_modified(self):
        original = TrainingConfig(ablations=("no_il",))
        variant_selector(original)
        assert original.iterative_enabled


# ─── 승격 ─────────────────────────────────────────────────────

class TestFilterConclusions:
    def test_high_probability_promoted_low_retained(self):
        state = state_with_candidates([(0, 0, 1), (1, 0, 2)])
        model = scoring_mock({(0, 0, 1): 0.995, (1, 0, 2): 0.5})
        promoted = filter_conclusions(model, state, 0.99)
        assert promoted == [Triple(0, 0, 1)]
        assert state.accepted == [Triple(0, 0, 1)]
        assert state.conclusions.state((1, 0, 2)) is ConclusionState.CANDIDATE
        assert state.candidate_count == 1

    def test_threshold_must_exceed_half(self):
        with pytest.raises(ValueError):
            filter_conclusions(MagicMock(), state_with_candidates([(0, 0, 1)]), 0.5)

    def test_threshold_above_one_promotes_nothing(self):
        state = state_with_candidates([(0, 0, 1)])
        model = scoring_mock({(0, 0, 1): 0.9999999})
        assert filter_conclusions(model, state, 1.01) == []

    def test_triples_already_in_graph_skipped(self):
        state = state_with_candidates([(0, 0, 1), (1, 0, 2)])
        model = scoring_mock({(0, 0, 1): 0.999, (1, 0, 2): 0.999})
        kg = MagicMock()
        kg.__contains__.side_effect = lambda t: tuple(t) == (0, 0, 1)
        assert filter_conclusions(model, state, 0.99, kg) == [Triple(1, 0, 2)]

    def test_no_candidates(self):
        model = MagicMock()
        assert filter_conclusions(model, IterationState(), 0.99) == []
        model.probability.assert_not_called()


class TestTopN:
    @pytest.mark.parametrize("size,confidence,expected", [
        (4, 0.625, 3), (3, 0.5, 2), (4, 0.3, 1), (5, 1.0, 5), (0, 0.9, 0), (7, 0.01, 0),
    ])
    def test_count(self, size, confidence, expected):
        assert top_n_count(size, confidence) == expected

    def test_full_confidence_promotes_whole_group(self):
        state = state_with_candidates([(0, 0, 1), (2, 0, 1)])
        model = scoring_mock({(0, 0, 1): -3.0, (2, 0, 1): 1.0})
        promoted = promote_top_n(model, state, [HornRule.length1(1, 0, 1.0)])
        assert promoted == [Triple(0, 0, 1), Triple(2, 0, 1)]

    def test_highest_scores_win_ties_by_id(self):
        group = [(0, 0, 1), (1, 0, 1), (2, 0, 1), (3, 0, 1)]
        state = state_with_candidates(group)
        model = scoring_mock({(0, 0, 1): 0.0, (1, 0, 1): 2.0, (2, 0, 1): 2.0, (3, 0, 1): 1.0})
        rules = [HornRule.length1(1, 0, 0.25)]
        assert promote_top_n(model, state, rules) == [Triple(1, 0, 1)]

    def test_rule_mean_scores(self):
        state = state_with_candidates([(0, 0, 1), (1, 0, 1)], [])
        model = scoring_mock({(0, 0, 1): 0.2, (1, 0, 1): 0.6})
        assert rule_mean_scores(model, state) == {"0": pytest.approx(0.4)}


# ─── 학습 루프 ────────────────────────────────────────────────

class TestRunTraining:
    def test_deterministic(self, synthetic, tiny_config):
        kg = synthetic.graph("train")
        a = run_training(kg, synthetic.rules, tiny_config, **QUIET)
        b = run_training(kg, synthetic.rules, tiny_config, **QUIET)
        np.testing.assert_array_equal(a.model.entity_re, b.model.entity_re)
        np.testing.assert_array_equal(a.model.relation_im, b.model.relation_im)
        assert [r.to_dict() for r in a.state.records] == [r.to_dict() for r in b.state.records]
        assert a.kg.triples == b.kg.triples

    def test_input_graph_untouched_and_growth_consistent(self, synthetic, tiny_config):
        kg = synthetic.graph("train")
        size = len(kg)
        config = tiny_config.model_copy(update={"acceptance_threshold": 0.51})
        result = run_training(kg, synthetic.rules, config, **QUIET)
        assert len(kg) == size
        assert len(result.kg) == size + len(result.state.accepted)
        for record in result.state.records:
            assert record.kg_size == size + record.accepted_total
        for triple in result.state.accepted:
            assert triple not in kg
            assert triple in result.kg

    def test_grounding_schedule(self, synthetic, tiny_config):
        result = run_training(synthetic.graph("train"), synthetic.rules, tiny_config, **QUIET)
        assert [r.grounded for r in result.state.records] == [True, False, True, False]
        assert result.state.groundings == 2
        assert [r.epoch for r in result.state.records] == [1, 2, 3, 4]

    def test_no_rules_is_plain_embedding(self, synthetic, tiny_config):
        result = run_training(synthetic.graph("train"), [], tiny_config, **QUIET)
        assert result.state.groundings == 0
        assert result.state.accepted == []
        for record in result.state.records:
            assert record.loss["dc"] == record.loss["rc"] == 0.0
            assert record.candidates == 0

    def test_threshold_above_one_never_promotes(self, synthetic, tiny_config):
        config = tiny_config.model_copy(update={"acceptance_threshold": 1.01})
        result = run_training(synthetic.graph("train"), synthetic.rules, config, **QUIET)
        assert result.state.accepted == []
        assert len(result.kg) == len(synthetic.train)

    def test_no_il_grounds_once(self, synthetic, tiny_config):
        config = tiny_config.model_copy(update={"ablations": ("no_il",)})
        result = run_training(synthetic.graph("train"), synthetic.rules, config, **QUIET)
        assert result.state.groundings == 1
        assert result.state.accepted == []
        assert result.state.records[-1].candidates > 0

    def test_top_n_promotes_at_block_end(self, synthetic, tiny_config):
        config = tiny_config.model_copy(update={"ablations": ("top_n",)})
        result = run_training(synthetic.graph("train"), synthetic.rules, config, **QUIET)
        promoted = [r.promoted for r in result.state.records]
        assert promoted[0] == promoted[2] == 0
        assert promoted[1] > 0

    @pytest.mark.parametrize("ablation", ["ac", "wc", "no_dc", "no_rc", "no_nne", "no_l2"])
    def test_variants_train(self, synthetic, tiny_config, ablation):
        config = tiny_config.model_copy(update={"ablations": (ablation,)})
        result = run_training(synthetic.graph("train"), synthetic.rules, config, **QUIET)
        assert result.model.is_finite()
        assert result.state.epoch == config.epochs

    def test_rotate_scorer(self, synthetic, tiny_config):
        config = tiny_config.model_copy(update={"scorer_kind": "rotate", "nne_enabled": False})
        result = run_training(synthetic.graph("train"), synthetic.rules, config, **QUIET)
        assert result.model.scorer_kind == "rotate"
        assert result.model.is_finite()

    def test_hogwild_updates(self, synthetic, tiny_config):
        config = tiny_config.model_copy(update={"update_contract": "hogwild", "workers": 2, "batch_size": 16})
        result = run_training(synthetic.graph("train"), synthetic.rules, config, **QUIET)
        assert result.model.is_finite()

    def test_fixed_conclusion_fraction(self, synthetic, tiny_config):
        config = tiny_config.model_copy(update={"conclusion_batch_fraction": 0.2})
        result = run_training(synthetic.graph("train"), synthetic.rules, config, **QUIET)
        assert result.model.is_finite()

    def test_evaluator_called_every_k_epochs(self, synthetic, tiny_config):
        evaluator = MagicMock(return_value={"MRR": 0.5})
        result = run_training(synthetic.graph("train"), synthetic.rules, tiny_config,
                              evaluator=evaluator, eval_every=2, **QUIET)
        assert evaluator.call_count == 2
        assert result.state.records[1].metrics == {"MRR": 0.5}
        assert result.state.records[0].metrics == {}

    def test_epoch_log_written(self, synthetic, tiny_config, tmp_path):
        run_training(synthetic.graph("train"), synthetic.rules, tiny_config, output_dir=tmp_path, **QUIET)
        lines = (tmp_path / EPOCH_LOG_FILE).read_text(encoding="utf-8").splitlines()
        records = [json.loads(line) for line in lines]
        assert [r["epoch"] for r in records] == [1, 2, 3, 4]
        assert set(records[0]["loss"]) == {"logistic", "dc", "rc", "l2", "total"}

    def test_initial_conclusions_replace_first_grounding(self, synthetic, tiny_config):
        kg = synthetic.graph("train")
        initial = ground_rules(kg, synthetic.rules, logger=lambda msg: None)
        before = initial.to_dict()
        plain = run_training(kg, synthetic.rules, tiny_config, **QUIET)
        with patch("modules.m4_trainer.trainer.ground_rules", wraps=ground_rules) as grounding:
            result = run_training(kg, synthetic.rules, tiny_config, initial_conclusions=initial, **QUIET)
        # epoch 3의 재grounding만 직접 수행
        assert grounding.call_count == 1
        assert result.state.groundings == 2
        assert initial.to_dict() == before
        assert [r.to_dict() for r in result.state.records] == [r.to_dict() for r in plain.state.records]

    def test_warmup_delays_grounding(self, synthetic, tiny_config):
        config = tiny_config.model_copy(update={"warmup_epochs": 2})
        result = run_training(synthetic.graph("train"), synthetic.rules, config, **QUIET)
        assert [r.grounded for r in result.state.records] == [False, False, True, True]
        for record in result.state.records[:2]:
            assert record.candidates == 0
            assert record.loss["dc"] == record.loss["rc"] == 0.0
            assert record.promoted == 0

    def test_group_scope_trains(self, synthetic, tiny_config):
        config = tiny_config.model_copy(update={"rule_loss_scope": "group", "batch_size": 16})
        result = run_training(synthetic.graph("train"), synthetic.rules, config, **QUIET)
        assert result.model.is_finite()
        assert result.state.groundings == 2


class TestMakeBatches:
    GROUPS = ([(0, 0, 1), (1, 0, 2), (2, 0, 3)], [(4, 1, 5)])

    def batches(self, synthetic, state, **update):
        config = TrainingConfig(batch_size=32, negatives=1, progress=False, **update)
        return _make_batches(synthetic.graph("train"), state, config, np.random.default_rng(0))

    @staticmethod
    def flattened(batches) -> dict[int, list]:
        out: dict[int, list] = {}
        for batch in batches:
            for rid, rows in batch.groups.items():
                out.setdefault(rid, []).extend(map(tuple, rows.tolist()))
        return {rid: sorted(rows) for rid, rows in out.items()}

    def test_batch_scope_splits_groups(self, synthetic):
        batches = self.batches(synthetic, state_with_candidates(*self.GROUPS))
        assert len(batches) > 1
        assert self.flattened(batches) == {0: sorted(self.GROUPS[0]), 1: self.GROUPS[1]}

    def test_group_scope_repeats_whole_groups(self, synthetic):
        batches = self.batches(synthetic, state_with_candidates(*self.GROUPS), rule_loss_scope="group")
        assert len(batches) > 1
        for batch in batches:
            assert batch.groups[0].tolist() == [list(t) for t in self.GROUPS[0]]
            assert batch.groups[1].tolist() == [list(t) for t in self.GROUPS[1]]

    def test_accepted_members_stay_in_rule_groups(self, synthetic):
        state = state_with_candidates(*self.GROUPS)
        state.conclusions.accept([(1, 0, 2)])
        assert self.flattened(self.batches(synthetic, state))[0] == sorted(self.GROUPS[0])
        # ac / wc 라벨은 후보만
        labeled = self.flattened(self.batches(synthetic, state, conclusion_label_mode="all_positive"))
        assert labeled[0] == [(0, 0, 1), (2, 0, 3)]


class TestResume:
    def test_resume_matches_uninterrupted_run(self, synthetic, tiny_config, tmp_path):
        kg = synthetic.graph("train")
        straight = run_training(kg, synthetic.rules, tiny_config, **QUIET)

        first_half = tiny_config.model_copy(update={"epochs": 2, "iterative_steps": 1, "checkpoint_every": 1})
        run_training(kg, synthetic.rules, first_half, output_dir=tmp_path, **QUIET)
        assert (tmp_path / CHECKPOINT_FILE).exists()
        assert (tmp_path / TRAINER_STATE_FILE).exists()

        resumed = run_training(kg, synthetic.rules, tiny_config, output_dir=tmp_path, resume=True, **QUIET)
        assert resumed.state.epoch == 4
        np.testing.assert_array_equal(resumed.model.entity_re, straight.model.entity_re)
        np.testing.assert_array_equal(resumed.model.entity_im, straight.model.entity_im)
        assert resumed.state.accepted == straight.state.accepted
        assert [r.to_dict() for r in resumed.state.records] == [r.to_dict() for r in straight.state.records]
        assert resumed.kg.triples == straight.kg.triples

    def test_resume_without_checkpoint_starts_fresh(self, synthetic, tiny_config, tmp_path):
        result = run_training(synthetic.graph("train"), synthetic.rules, tiny_config,
                              output_dir=tmp_path, resume=True, **QUIET)
        assert result.state.epoch == 4

    def test_resume_needs_output_dir(self, synthetic, tiny_config):
        with pytest.raises(ConfigError):
            run_training(synthetic.graph("train"), synthetic.rules, tiny_config, resume=True, **QUIET)
