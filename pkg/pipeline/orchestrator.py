"""
파이프라인 오케스트레이터
load → mine → ground → train → eval → export 순차 실행 + 상태 관리

- 단계 실패 시 StageError(단계명)를 던지고, 출력 디렉토리에 .partial 표시 파일을 남깁니다.
- 정상 완료 시 .partial을 지우고 run_status.json을 씁니다.
"""
import datetime
import json
import logging
import uuid
from pathlib import Path
from typing import NamedTuple, Optional

from config.schemas import MiningConfig, RunConfig
from modules.errors import ConfigError, StageError
from modules.m1_kg_core import KnowledgeGraph, Vocabulary, load_triples, save_triples
from modules.m2_rule_engine import (
    ConclusionSet, HornRule, dedupe_rules, ground_rules, mine_rules, parse_rules, serialize_rules,
)
from modules.m3_embedding import EmbeddingModel
from modules.m4_trainer import TrainingResult, run_training
from modules.m5_eval import MetricsStore, evaluate, format_metrics_table, metrics_frame

log = logging.getLogger(__name__)

PARTIAL_MARKER = ".partial"
STATUS_FILE = "run_status.json"
RULES_FILE = "rules.txt"
CONCLUSIONS_FILE = "conclusions.tsv"
MODEL_FILE = "model.npz"
AUGMENTED_FILE = "augmented_train.tsv"


class Dataset(NamedTuple):
    vocab: Vocabulary
    train: KnowledgeGraph
    valid: Optional[KnowledgeGraph]
    test: Optional[KnowledgeGraph]

    def filter_graph(self) -> KnowledgeGraph:
        """train ∪ valid ∪ test (promoted conclusion 제외)"""
        return KnowledgeGraph.union(self.train, self.valid, self.test)


def load_dataset(config: RunConfig, vocab: Optional[Vocabulary] = None, logger=None) -> Dataset:
    """train은 vocabulary를 만들고 (vocab 미지정 시), valid/test는 고정 vocabulary로 읽습니다."""
    paths = config.paths
    if paths.train is None:
        raise ConfigError("paths.train is required")
    train = load_triples(paths.train, vocab=vocab, logger=logger)
    vocab = train.vocab
    valid = load_triples(paths.valid, vocab=vocab, logger=logger) if paths.valid else None
    test = load_triples(paths.test, vocab=vocab, logger=logger) if paths.test else None
    vocab.freeze()
    return Dataset(vocab, train, valid, test)


def load_or_mine_rules(config: RunConfig, dataset: Dataset, logger,
                       mining: Optional[MiningConfig] = None) -> list[HornRule]:
    """rule 파일이 있으면 읽고, 없으면 mining (mining 미지정 시 config.mining)"""
    if config.paths.rules:
        rules = parse_rules(config.paths.rules, dataset.vocab)
        logger(f"[M2] rules file supplied ({config.paths.rules}): mining skipped, {len(rules)} rules")
        return rules
    return dedupe_rules(mine_rules(dataset.train, mining or config.mining, logger=logger))


def write_partial_marker(output_dir: Path, stage: str, error: BaseException):
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / PARTIAL_MARKER).write_text(f"{stage}\t{type(error).__name__}: {error}\n", encoding="utf-8")


def clear_partial_marker(output_dir: Path):
    (output_dir / PARTIAL_MARKER).unlink(missing_ok=True)


class PipelineOrchestrator:
    """mine → ground → train → eval 파이프라인 오케스트레이터"""

    STEPS = [
        "load",     # M1: TSV 적재
        "mine",     # M2: rule mining (또는 rule 파일 적재)
        "ground",   # M2: 초기 grounding
        "train",    # M3/M4: 반복 학습
        "eval",     # M5: filtered link prediction
        "export",   # 산출물 저장
    ]

    def __init__(self):
        self.current_run: Optional[dict] = None
        self._logs: list[str] = []

    def _log(self, msg: str):
        ts = datetime.datetime.now().strftime("%H:%M:%S")
        self._logs.append(f"[{ts}] {msg}")
        log.info(msg)

    def get_status(self) -> dict:
        if not self.current_run:
            return {
                "run_id": "",
                "status": "idle",
                "current_step": "",
                "progress": 0.0,
                "started_at": None,
                "completed_at": None,
                "stats": {},
                "logs": [],
            }
        return {**self.current_run, "logs": list(self._logs[-100:])}

    def run(self, config: RunConfig) -> dict:
        """전체 파이프라인 실행. 실패 시 StageError"""
        run_id = uuid.uuid4().hex[:12]
        output_dir = Path(config.output_dir)
        self.current_run = {
            "run_id": run_id,
            "status": "running",
            "current_step": "",
            "progress": 0.0,
            "started_at": datetime.datetime.now().isoformat(),
            "completed_at": None,
            "output_dir": str(output_dir),
            "stats": {},
        }
        self._logs = []
        self._log(f"=== 파이프라인 시작 (run_id={run_id}) ===")
        self._log(f"  output_dir={output_dir}, seed={config.seed}, workers={config.workers}")

        stage = ""
        try:
            stage = "load"
            dataset = self._step_load(config)
            stage = "mine"
            rules = self._step_mine(config, dataset)
            stage = "ground"
            conclusions = self._step_ground(config, dataset, rules)
            stage = "train"
            result = self._step_train(config, dataset, rules, conclusions)
            stage = "eval"
            metrics = self._step_eval(config, dataset, result)
            stage = "export"
            self._step_export(config, dataset, result, metrics)
        except Exception as e:
            self.current_run["status"] = "failed"
            self.current_run["failed_step"] = stage
            self.current_run["completed_at"] = datetime.datetime.now().isoformat()
            self._log(f"=== 파이프라인 실패 [{stage}]: {e} ===")
            write_partial_marker(output_dir, stage, e)
            self._write_status(output_dir)
            raise StageError(stage, e) from e

        clear_partial_marker(output_dir)
        self.current_run["status"] = "completed"
        self.current_run["completed_at"] = datetime.datetime.now().isoformat()
        self.current_run["progress"] = 1.0
        self._log("=== 파이프라인 완료 ===")
        self._write_status(output_dir)
        return self.get_status()

    # ── 개별 단계 ──────────────────────────────────────────────

    def _step_load(self, config: RunConfig) -> Dataset:
        self._update_step("load", 1)
        dataset = load_dataset(config, logger=self._log)
        stats = self.current_run["stats"]
        stats["entities"] = dataset.vocab.entity_count
        stats["relations"] = dataset.vocab.relation_count
        stats["train_triples"] = len(dataset.train)
        return dataset

    def _step_mine(self, config: RunConfig, dataset: Dataset) -> list[HornRule]:
        self._update_step("mine", 2)
        rules = load_or_mine_rules(config, dataset, self._log)
        serialize_rules(rules, Path(config.output_dir) / RULES_FILE, dataset.vocab)
        self.current_run["stats"]["rules"] = len(rules)
        return rules

    def _step_ground(self, config: RunConfig, dataset: Dataset, rules: list[HornRule]) -> ConclusionSet:
        self._update_step("ground", 3)
        conclusions = ground_rules(dataset.train, rules, workers=config.workers, logger=self._log)
        self.current_run["stats"]["initial_conclusions"] = len(conclusions)
        return conclusions

    def _step_train(self, config: RunConfig, dataset: Dataset, rules: list[HornRule],
                    conclusions: ConclusionSet) -> TrainingResult:
        self._update_step("train", 4)
        evaluator = None
        if config.eval.every and dataset.valid is not None:
            kg_filter = dataset.filter_graph()

            def evaluator(model: EmbeddingModel) -> dict:
                return evaluate(model, dataset.valid, kg_filter, filtered=config.eval.filtered,
                                workers=config.eval.workers, logger=log.debug)

        result = run_training(
            dataset.train, rules, config.train, logger=self._log,
            output_dir=Path(config.output_dir), resume=config.resume,
            evaluator=evaluator, eval_every=config.eval.every, initial_conclusions=conclusions,
        )
        stats = self.current_run["stats"]
        stats["epochs"] = result.state.epoch
        stats["accepted_conclusions"] = len(result.state.accepted)
        stats["augmented_triples"] = len(result.kg)
        return result

    def _step_eval(self, config: RunConfig, dataset: Dataset, result: TrainingResult) -> dict:
        self._update_step("eval", 5)
        kg_filter = dataset.filter_graph()
        metrics = {}
        for split in ("valid", "test"):
            graph = getattr(dataset, split)
            if graph is None or len(graph) == 0:
                continue
            metrics[split] = evaluate(result.model, graph, kg_filter, filtered=config.eval.filtered,
                                      workers=config.eval.workers, logger=self._log)
        if not metrics:
            self._log("[M5] no valid/test split given, evaluation skipped")
        self.current_run["stats"]["metrics"] = metrics
        return metrics

    def _step_export(self, config: RunConfig, dataset: Dataset, result: TrainingResult, metrics: dict):
        self._update_step("export", 6)
        output_dir = Path(config.output_dir)
        result.model.save(output_dir / MODEL_FILE)
        save_triples(result.kg, output_dir / AUGMENTED_FILE, dataset.vocab)
        dataset.vocab.save(output_dir)
        result.state.conclusions.save_tsv(output_dir / CONCLUSIONS_FILE, dataset.vocab)
        csv_path = MetricsStore(output_dir).export_csv(metrics, logger=self._log)
        if metrics:
            self._log("\n" + format_metrics_table(metrics_frame(metrics)))
        self.current_run["stats"]["metrics_csv"] = str(csv_path)

    def _write_status(self, output_dir: Path):
        output_dir.mkdir(parents=True, exist_ok=True)
        (output_dir / STATUS_FILE).write_text(
            json.dumps(self.get_status(), indent=2, ensure_ascii=False, default=str), encoding="utf-8"
        )

    def _update_step(self, step_name: str, step_num: int):
        total = len(self.STEPS)
        self.current_run["current_step"] = step_name
        self.current_run["progress"] = round((step_num - 1) / total, 2)
        self._log(f"── Step {step_num}/{total}: {step_name} ──")


# 싱글톤 인스턴스
_orchestrator = PipelineOrchestrator()


def get_orchestrator() -> PipelineOrchestrator:
    return _orchestrator
