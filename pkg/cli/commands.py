"""
CLI 하위 명령 구현: 각 함수는 RunConfig(+argparse 값)를 받아 종료 코드를 돌려줍니다.
"""
import json
import logging
from pathlib import Path

from config.loader import dump_run_config
from config.schemas import RunConfig, SynthConfig
from modules.errors import ConfigError
from modules.m1_kg_core import Vocabulary, save_triples
from modules.m2_rule_engine import ground_rules, parse_rules, serialize_rules
from modules.m3_embedding import EmbeddingModel
from modules.m4_trainer import run_training
from modules.m5_eval import (
    MetricsStore, confidence_sweep, evaluate, export_sweep, format_metrics_table, make_sweep_runner,
    metrics_frame,
)
from modules.m6_synth import generate
from pipeline.orchestrator import (
    AUGMENTED_FILE, CONCLUSIONS_FILE, MODEL_FILE, RULES_FILE, get_orchestrator, load_dataset,
    load_or_mine_rules,
)

log = logging.getLogger(__name__)

RUN_CONFIG_FILE = "run_config.txt"


def _output_dir(config: RunConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_mine(config: RunConfig, expected_count: int | None = None) -> int:
    dataset = load_dataset(config)
    if len(dataset.train) == 0:
        raise ConfigError(f"training graph {config.paths.train} is empty")
    rules = load_or_mine_rules(config, dataset, log.info)
    path = _output_dir(config) / RULES_FILE
    serialize_rules(rules, path, dataset.vocab)
    print(f"{len(rules)} rules → {path}")
    if expected_count is not None:
        diff = len(rules) - expected_count
        print(f"expected {expected_count}, deviation {diff:+d}")
    return 0


def cmd_ground(config: RunConfig) -> int:
    if config.paths.rules is None:
        raise ConfigError("ground needs a rules file (--rules or paths.rules)")
    dataset = load_dataset(config)
    rules = parse_rules(config.paths.rules, dataset.vocab)
    conclusions = ground_rules(dataset.train, rules, workers=config.workers)
    path = _output_dir(config) / CONCLUSIONS_FILE
    conclusions.save_tsv(path, dataset.vocab)
    print(f"{len(conclusions)} conclusions from {len(rules)} rules → {path}")
    return 0


def cmd_train(config: RunConfig) -> int:
    dataset = load_dataset(config)
    rules = parse_rules(config.paths.rules, dataset.vocab) if config.paths.rules else []
    if not rules:
        log.info("[M4] no rules file given, training the base model on triples only")
    output_dir = _output_dir(config)
    result = run_training(dataset.train, rules, config.train, output_dir=output_dir, resume=config.resume)
    result.model.save(output_dir / MODEL_FILE)
    save_triples(result.kg, output_dir / AUGMENTED_FILE, dataset.vocab)
    dataset.vocab.save(output_dir)
    result.state.conclusions.save_tsv(output_dir / CONCLUSIONS_FILE, dataset.vocab)
    print(f"trained {result.state.epoch} epochs, {len(result.state.accepted)} accepted conclusions → {output_dir}")
    return 0


def cmd_eval(config: RunConfig, model_path: Path) -> int:
    model_path = Path(model_path)
    vocab = Vocabulary.load(model_path.parent)
    model = EmbeddingModel.load(model_path)
    dataset = load_dataset(config, vocab=vocab)
    if dataset.test is None and dataset.valid is None:
        raise ConfigError("eval needs paths.test or paths.valid")
    kg_filter = dataset.filter_graph()
    metrics = {}
    for split in ("valid", "test"):
        graph = getattr(dataset, split)
        if graph is not None and len(graph):
            metrics[split] = evaluate(model, graph, kg_filter, filtered=config.eval.filtered,
                                      workers=config.eval.workers)
    MetricsStore(_output_dir(config)).export_csv(metrics)
    print(format_metrics_table(metrics_frame(metrics)))
    return 0


def cmd_pipeline(config: RunConfig) -> int:
    output_dir = _output_dir(config)
    (output_dir / RUN_CONFIG_FILE).write_text(dump_run_config(config), encoding="utf-8")
    status = get_orchestrator().run(config)
    print(json.dumps(status["stats"], indent=2, ensure_ascii=False, default=str))
    return 0


def cmd_sweep(config: RunConfig) -> int:
    dataset = load_dataset(config)
    if dataset.test is None:
        raise ConfigError("sweep needs a test split (paths.test)")
    # 가장 낮은 threshold의 rule까지 mining
    floor = min((config.mining.min_confidence, *config.eval.sweep_thresholds))
    mining = config.mining.model_copy(update={"min_confidence": floor})
    rules = load_or_mine_rules(config, dataset, log.info, mining=mining)
    runner = make_sweep_runner(dataset.train, dataset.test, dataset.filter_graph(), config.train,
                               filtered=config.eval.filtered, workers=config.eval.workers)
    frame = confidence_sweep(runner, rules, config.eval.sweep_thresholds)
    path = export_sweep(frame, _output_dir(config))
    print(frame.to_markdown(index=False, floatfmt=".4f"))
    print(f"→ {path}")
    return 0


def cmd_synth(synth: SynthConfig, output_dir: Path) -> int:
    dataset = generate(synth)
    paths = dataset.write(output_dir)
    print(f"synthetic dataset → {Path(output_dir)} "
          f"({len(dataset.train)} train, {len(dataset.test)} test, {len(dataset.all_false())} false conclusions)")
    log.debug("synth files: %s", paths)
    return 0
