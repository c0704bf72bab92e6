"""파이프라인 오케스트레이터 + CLI 종료 코드"""
import json
from unittest.mock import patch

import pandas as pd
import pytest

from cli.main import main
from config.schemas import PathsConfig, RunConfig, SynthConfig, TrainingConfig
from modules.errors import StageError
from modules.m2_rule_engine import ground_rules
from modules.m6_synth import generate
from pipeline.orchestrator import (
    AUGMENTED_FILE, CONCLUSIONS_FILE, MODEL_FILE, PARTIAL_MARKER, RULES_FILE, STATUS_FILE, PipelineOrchestrator,
)

SYNTH = SynthConfig(entity_count=40, pairs_per_rule=30, noise_triples=20, seed=1)
FAST_TRAIN = ["--set", "train.iterative_steps=2", "--set", "train.batch_size=64",
              "--set", "train.negatives=2", "--set", "train.progress=false"]


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("synth")
    generate(SYNTH).write(path, logger=lambda msg: None)
    return path


def run_config(data_dir, output_dir, with_rules: bool = True) -> RunConfig:
    return RunConfig(
        paths=PathsConfig(train=data_dir / "train.tsv", valid=data_dir / "valid.tsv", test=data_dir / "test.tsv",
                          rules=data_dir / "rules.txt" if with_rules else None),
        train=TrainingConfig(dim=8, epochs=4, iterative_steps=2, batch_size=64, negatives=2, progress=False),
        output_dir=output_dir,
        seed=0,
        workers=1,
    )


class TestOrchestrator:
    def test_full_run(self, data_dir, tmp_path):
        orchestrator = PipelineOrchestrator()
        assert orchestrator.get_status()["status"] == "idle"
        status = orchestrator.run(run_config(data_dir, tmp_path, with_rules=False))

        assert status["status"] == "completed"
        assert status["progress"] == 1.0
        assert set(status["stats"]["metrics"]) == {"valid", "test"}
        for name in (MODEL_FILE, AUGMENTED_FILE, CONCLUSIONS_FILE, RULES_FILE, STATUS_FILE,
                     "metrics.csv", "entities.tsv", "relations.tsv", "epoch_log.jsonl"):
            assert (tmp_path / name).exists(), name
        assert not (tmp_path / PARTIAL_MARKER).exists()

    def test_initial_grounding_feeds_training(self, data_dir, tmp_path):
        with patch("modules.m4_trainer.trainer.ground_rules", wraps=ground_rules) as regrounding:
            PipelineOrchestrator().run(run_config(data_dir, tmp_path))
        # grounding 단계 결과로 epoch 1을 시작하고 epoch 3에만 다시 grounding
        assert regrounding.call_count == 1
        assert (tmp_path / CONCLUSIONS_FILE).exists()
        saved = json.loads((tmp_path / STATUS_FILE).read_text(encoding="utf-8"))
        assert saved["status"] == "completed"

    def test_rules_file_skips_mining(self, data_dir, tmp_path):
        orchestrator = PipelineOrchestrator()
        with patch("pipeline.orchestrator.mine_rules") as mine:
            status = orchestrator.run(run_config(data_dir, tmp_path))
        mine.assert_not_called()
        assert status["stats"]["rules"] == 2
        assert any("mining skipped" in line for line in status["logs"])

    def test_identical_metrics_across_runs(self, data_dir, tmp_path):
        for name in ("a", "b"):
            PipelineOrchestrator().run(run_config(data_dir, tmp_path / name))
        first = (tmp_path / "a" / "metrics.csv").read_bytes()
        assert first == (tmp_path / "b" / "metrics.csv").read_bytes()

    def test_stage_failure_leaves_partial_marker(self, data_dir, tmp_path):
        orchestrator = PipelineOrchestrator()
        with patch.object(PipelineOrchestrator, "_step_train", side_effect=RuntimeError("boom")):
            with pytest.raises(StageError) as exc:
                orchestrator.run(run_config(data_dir, tmp_path))
        assert exc.value.stage == "train"
        assert (tmp_path / PARTIAL_MARKER).read_text(encoding="utf-8").startswith("train\t")
        assert orchestrator.get_status()["status"] == "failed"
        assert orchestrator.get_status()["failed_step"] == "train"

    def test_missing_train_file(self, tmp_path):
        config = RunConfig(paths=PathsConfig(train=tmp_path / "absent.tsv"), output_dir=tmp_path / "out")
        with pytest.raises(StageError) as exc:
            PipelineOrchestrator().run(config)
        assert exc.value.stage == "load"
        assert isinstance(exc.value.cause, FileNotFoundError)
        assert (tmp_path / "out" / PARTIAL_MARKER).exists()

    def test_success_clears_old_marker(self, data_dir, tmp_path):
        (tmp_path / PARTIAL_MARKER).write_text("train\told failure\n", encoding="utf-8")
        PipelineOrchestrator().run(run_config(data_dir, tmp_path))
        assert not (tmp_path / PARTIAL_MARKER).exists()


class TestCli:
    def test_synth(self, tmp_path):
        code = main(["synth", "--output-dir", str(tmp_path), "--entities", "40", "--pairs", "30",
                     "--noise", "10", "--seed", "2"])
        assert code == 0
        assert (tmp_path / "train.tsv").exists()
        assert (tmp_path / "rules.txt").exists()

    def test_synth_invalid_option(self, tmp_path):
        assert main(["synth", "--output-dir", str(tmp_path), "--confidences", "1.5"]) == 1

    def test_mine_missing_input(self, tmp_path, capsys):
        code = main(["mine", "--train", str(tmp_path / "missing.tsv"), "--output-dir", str(tmp_path)])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_mine_threshold_above_one(self, data_dir, tmp_path, capsys):
        code = main(["mine", "--train", str(data_dir / "train.tsv"), "--min-confidence", "1.01",
                     "--output-dir", str(tmp_path), "--expected-count", "0"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("0 rules")
        assert "deviation +0" in out
        assert (tmp_path / RULES_FILE).read_text(encoding="utf-8") == ""

    def test_mine_finds_planted_rules(self, data_dir, tmp_path):
        code = main(["mine", "--train", str(data_dir / "train.tsv"), "--output-dir", str(tmp_path),
                     "--set", "mining.min_confidence=0.5"])
        assert code == 0
        text = (tmp_path / RULES_FILE).read_text(encoding="utf-8")
        assert "rel0_premise(x,y) => rel0_conclusion(x,y)" in text

    def test_ground(self, data_dir, tmp_path):
        code = main(["ground", "--train", str(data_dir / "train.tsv"), "--rules", str(data_dir / "rules.txt"),
                     "--output-dir", str(tmp_path)])
        assert code == 0
        assert (tmp_path / CONCLUSIONS_FILE).read_text(encoding="utf-8").strip()

    def test_ground_needs_rules(self, data_dir, tmp_path):
        assert main(["ground", "--train", str(data_dir / "train.tsv"), "--output-dir", str(tmp_path)]) == 1

    def test_pipeline_then_eval(self, data_dir, tmp_path):
        run_dir = tmp_path / "run"
        code = main(["pipeline", "--train", str(data_dir / "train.tsv"), "--valid", str(data_dir / "valid.tsv"),
                     "--test", str(data_dir / "test.tsv"), "--rules", str(data_dir / "rules.txt"),
                     "--epochs", "4", "--dim", "8", "--output-dir", str(run_dir), *FAST_TRAIN])
        assert code == 0
        assert (run_dir / "run_config.txt").exists()

        eval_dir = tmp_path / "eval"
        code = main(["eval", "--model", str(run_dir / MODEL_FILE), "--train", str(data_dir / "train.tsv"),
                     "--test", str(data_dir / "test.tsv"), "--output-dir", str(eval_dir)])
        assert code == 0
        assert "test" in (eval_dir / "metrics.csv").read_text(encoding="utf-8")

    def test_train(self, data_dir, tmp_path):
        code = main(["train", "--train", str(data_dir / "train.tsv"), "--rules", str(data_dir / "rules.txt"),
                     "--epochs", "2", "--dim", "4", "--output-dir", str(tmp_path), *FAST_TRAIN])
        assert code == 0
        assert (tmp_path / MODEL_FILE).exists()
        assert (tmp_path / AUGMENTED_FILE).exists()

    def test_sweep(self, data_dir, tmp_path):
        code = main(["sweep", "--train", str(data_dir / "train.tsv"), "--test", str(data_dir / "test.tsv"),
                     "--rules", str(data_dir / "rules.txt"), "--thresholds", "0.9,1.01",
                     "--output-dir", str(tmp_path), "--set", "train.epochs=2", "--set", "train.dim=4",
                     *FAST_TRAIN])
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("threshold,rules,MRR")
        assert len(lines) == 3

    def test_sweep_mines_down_to_lowest_threshold(self, tmp_path):
        data = tmp_path / "data"
        generate(SynthConfig(entity_count=40, pairs_per_rule=30, rule_confidences=(1.0, 0.7), rule_lengths=(1,),
                             holdout_fraction=0.1, noise_triples=0, seed=1)).write(data, logger=lambda msg: None)
        code = main(["sweep", "--train", str(data / "train.tsv"), "--test", str(data / "test.tsv"),
                     "--thresholds", "0.5,0.8", "--output-dir", str(tmp_path / "out"),
                     "--set", "mining.confidence_kind=standard", "--set", "train.epochs=2",
                     "--set", "train.dim=4", *FAST_TRAIN])
        assert code == 0
        frame = pd.read_csv(tmp_path / "out" / "sweep.csv").set_index("threshold")
        # rel1 rule (19 / 30)은 0.5 행에만
        assert frame.loc[0.5, "rules"] > frame.loc[0.8, "rules"] > 0

    def test_usage_error_exits_with_two(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main(["train", "--epochs", "many"])
        assert exc.value.code == 2
