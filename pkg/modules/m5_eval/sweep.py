"""
M5: rule confidence threshold sweep
mined rule 집합을 threshold마다 다시 거르고, 학습 + 평가를 반복합니다.
"""
import logging
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import pandas as pd

from config.schemas import DEFAULT_SWEEP_THRESHOLDS, TrainingConfig
from modules.m1_kg_core.graph import KnowledgeGraph
from modules.m2_rule_engine.rules import HornRule, filter_rules
from modules.m4_trainer.trainer import run_training
from .ranking import METRIC_NAMES, evaluate

log = logging.getLogger(__name__)

SWEEP_FILE = "sweep.csv"
SWEEP_COLUMNS = ["threshold", "rules"] + list(METRIC_NAMES)

SweepRunner = Callable[[list[HornRule]], dict[str, float]]


def make_sweep_runner(train: KnowledgeGraph, test: KnowledgeGraph, kg_filter: Optional[KnowledgeGraph],
                      config: TrainingConfig, filtered: bool = True, workers: int = 1) -> SweepRunner:
    """rule 목록 → 학습 후 test metrics. 모든 threshold가 같은 seed를 씁니다."""
    quiet = config.model_copy(update={"progress": False})

    def _run(rules: list[HornRule]) -> dict[str, float]:
        result = run_training(train, rules, quiet, logger=log.debug)
        return evaluate(result.model, test, kg_filter, filtered=filtered, workers=workers, logger=log.debug)

    return _run


def confidence_sweep(runner: SweepRunner, rules: Sequence[HornRule],
                     thresholds: Iterable[float] = DEFAULT_SWEEP_THRESHOLDS,
                     logger: Optional[Callable[[str], None]] = None) -> pd.DataFrame:
    """threshold별 (rule 수, metrics) 표: threshold 오름차순"""
    logger = logger or log.info
    rows = []
    for threshold in sorted(set(float(t) for t in thresholds)):
        kept = filter_rules(rules, threshold)
        metrics = runner(kept)
        logger(f"[M5] sweep threshold {threshold:.2f}: {len(kept)} rules, MRR {metrics['MRR']:.4f}")
        rows.append({"threshold": threshold, "rules": len(kept), **{m: metrics[m] for m in METRIC_NAMES}})
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def export_sweep(frame: pd.DataFrame, output_dir: Path, filename: str = SWEEP_FILE) -> Path:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / filename
    frame.to_csv(path, index=False, lineterminator="\n")
    return path
