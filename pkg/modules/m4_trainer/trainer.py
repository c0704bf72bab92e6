"""
M4: 반복 학습 루프

epoch n (0부터) 마다:
  0. warmup_epochs 동안은 triple만으로 학습
  1. warm-up 이후 ⌊(N − warm-up)/M⌋ epoch마다 현재 KG로 rule을 다시 grounding → conclusion 갱신
  2. minibatch 단위로 joint objective를 AdaGrad로 최적화
  3. epoch 끝에서 σ(F) ≥ threshold 인 후보를 승격하여 KG에 삽입
     (top_n 모드는 grounding 구간의 마지막 epoch에서 rule별 상위 n개)

출력 디렉토리가 주어지면 epoch_log.jsonl을 쓰고, checkpoint_every마다
checkpoint.npz + trainer_state.json을 저장합니다 (resume 지원).
"""
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from tqdm import tqdm

from config.schemas import TrainingConfig
from modules.errors import ConfigError
from modules.m1_kg_core.graph import KnowledgeGraph
from modules.m2_rule_engine.grounding import ground_rules
from modules.m2_rule_engine.rules import ConclusionSet, HornRule
from modules.m3_embedding.losses import LabeledBatch, LossBreakdown, gradients, total_objective
from modules.m3_embedding.model import EmbeddingModel
from modules.m3_embedding.optimizer import AdaGrad
from modules.m3_embedding.sampling import sample_negative_batch
from .promotion import filter_conclusions, promote_top_n, rule_mean_scores
from .state import EpochRecord, IterationState
from .variants import describe_variant, variant_selector

log = logging.getLogger(__name__)

EPOCH_LOG_FILE = "epoch_log.jsonl"
CHECKPOINT_FILE = "checkpoint.npz"
TRAINER_STATE_FILE = "trainer_state.json"

Evaluator = Callable[[EmbeddingModel], dict]


class TrainingResult(NamedTuple):
    model: EmbeddingModel
    kg: KnowledgeGraph
    state: IterationState


class _Batch(NamedTuple):
    labeled: LabeledBatch
    groups: dict[int, np.ndarray]


# ─── minibatch 구성 ──────────────────────────────────────────

def _conclusion_chunks(rule_ids: np.ndarray, triples: np.ndarray, n_batches: int,
                       positives_per_batch: Sequence[int], config: TrainingConfig,
                       rng: np.random.Generator) -> list[dict[int, np.ndarray]]:
    """conclusion을 batch 수만큼 나눠 rule id별로 묶습니다 (group 범위면 매 batch에 전체)."""
    if len(triples) == 0:
        return [{} for _ in range(n_batches)]
    if config.rule_loss_scope == "group":
        whole = _group_by_rule(rule_ids, triples)
        return [whole for _ in range(n_batches)]
    order = rng.permutation(len(triples))
    if config.conclusion_batch_fraction is None:
        # |C|/(|T|+|C|) 비율: 모든 후보를 batch에 고르게 분배
        slices = np.array_split(order, n_batches)
    else:
        ratio = config.conclusion_batch_fraction / (1.0 - config.conclusion_batch_fraction)
        slices, cursor = [], 0
        for n_pos in positives_per_batch:
            k = max(1, round(ratio * n_pos))
            idx = np.arange(cursor, cursor + k) % len(order)
            slices.append(order[idx])
            cursor += k

    return [_group_by_rule(rule_ids[idx], triples[idx]) for idx in slices]


def _group_by_rule(rule_ids: np.ndarray, triples: np.ndarray) -> dict[int, np.ndarray]:
    return {int(rid): triples[rule_ids == rid] for rid in np.unique(rule_ids)}


def _conclusion_entries(state: IterationState, config: TrainingConfig) -> tuple[np.ndarray, np.ndarray]:
    # L_dc / L_rc 그룹은 다음 grounding까지 accepted conclusion도 유지
    if config.conclusion_label_mode == "rule_losses":
        return state.conclusions.member_entries()
    return state.conclusions.candidate_entries()


def _make_batches(kg: KnowledgeGraph, state: IterationState, config: TrainingConfig,
                  rng: np.random.Generator) -> list[_Batch]:
    positives = kg.triples_array()
    n_batches = max(1, math.ceil(len(positives) / config.batch_size))
    pos_chunks = np.array_split(positives[rng.permutation(len(positives))], n_batches)

    rule_ids, triples = _conclusion_entries(state, config)
    con_chunks = _conclusion_chunks(rule_ids, triples, n_batches,
                                    [len(c) for c in pos_chunks], config, rng)

    batches = []
    for pos, groups in zip(pos_chunks, con_chunks):
        neg = sample_negative_batch(kg, pos, config.negatives, rng)
        batches.append(_Batch(LabeledBatch.from_positives(pos, neg), groups))
    return batches


def _train_step(model: EmbeddingModel, batch: _Batch, rules: Sequence[HornRule],
                config: TrainingConfig, optimizer: AdaGrad) -> LossBreakdown:
    loss = total_objective(model, batch.labeled, batch.groups, rules, config)
    grads = gradients(model, batch.labeled, batch.groups, rules, config)
    optimizer.step(model, grads)
    return loss


def _mean_loss(losses: list[LossBreakdown]) -> LossBreakdown:
    n = max(1, len(losses))
    return LossBreakdown(
        logistic=math.fsum(l.logistic for l in losses) / n,
        dc=math.fsum(l.dc for l in losses) / n,
        rc=math.fsum(l.rc for l in losses) / n,
        l2=math.fsum(l.l2 for l in losses) / n,
    )


def run_epoch(model: EmbeddingModel, kg: KnowledgeGraph, state: IterationState,
              rules: Sequence[HornRule], config: TrainingConfig, optimizer: AdaGrad,
              rng: np.random.Generator, pool: Optional[ThreadPoolExecutor] = None) -> LossBreakdown:
    """
    한 epoch의 minibatch 갱신.
    negative sampling은 항상 주 스레드에서 rng 순서대로 수행합니다.
    pool이 주어지면 (hogwild) batch 갱신을 동기화 없이 병렬 적용합니다.
    """
    batches = _make_batches(kg, state, config, rng)
    if pool is None:
        losses = [_train_step(model, b, rules, config, optimizer) for b in batches]
    else:
        losses = list(pool.map(lambda b: _train_step(model, b, rules, config, optimizer), batches))
    return _mean_loss(losses)


# ─── checkpoint ───────────────────────────────────────────────

def save_checkpoint(output_dir: Path, model: EmbeddingModel, state: IterationState,
                    rng: np.random.Generator) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    model.save(output_dir / CHECKPOINT_FILE)
    payload = {"state": state.to_dict(), "rng": rng.bit_generator.state}
    path = output_dir / TRAINER_STATE_FILE
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload), encoding="utf-8")
    tmp.replace(path)
    return path


def load_checkpoint(output_dir: Path) -> Optional[tuple[EmbeddingModel, IterationState, dict]]:
    """(model, state, rng_state): checkpoint가 없으면 None"""
    state_path = output_dir / TRAINER_STATE_FILE
    model_path = output_dir / CHECKPOINT_FILE
    if not (state_path.exists() and model_path.exists()):
        return None
    payload = json.loads(state_path.read_text(encoding="utf-8"))
    return EmbeddingModel.load(model_path), IterationState.from_dict(payload["state"]), payload["rng"]


def _write_epoch_log(path: Path, records: list[EpochRecord], append: bool = True):
    with open(path, "a" if append else "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


# ─── 메인 루프 ────────────────────────────────────────────────

def run_training(
    kg: KnowledgeGraph,
    rules: Sequence[HornRule],
    config: Optional[TrainingConfig] = None,
    logger: Optional[Callable[[str], None]] = None,
    output_dir: Optional[Path] = None,
    resume: bool = False,
    evaluator: Optional[Evaluator] = None,
    eval_every: int = 0,
    initial_conclusions: Optional[ConclusionSet] = None,
) -> TrainingResult:
    """
    임베딩 + rule 반복 학습을 실행합니다. 입력 kg는 변경하지 않습니다.
    initial_conclusions: 입력 kg로 미리 grounding 한 결과. 주어지면 첫 grounding을 대신합니다.
    Returns: TrainingResult(model, 증강된 KG, IterationState)
    """
    logger = logger or log.info
    config = variant_selector(config or TrainingConfig())
    rules = list(rules)
    kg = kg.copy()
    output_dir = Path(output_dir) if output_dir is not None else None
    if resume and output_dir is None:
        raise ConfigError("resume requires an output directory")

    rng = np.random.default_rng(config.seed)
    model = EmbeddingModel.initialize(
        kg.entity_count, kg.relation_count, config.dim, rng,
        scorer_kind=config.scorer_kind, init_scale=config.init_scale,
        nne=config.nne_enabled, margin=config.rotate_margin,
    )
    state = IterationState()

    if resume:
        restored = load_checkpoint(output_dir)
        if restored is None:
            logger(f"[M4] no checkpoint in {output_dir}, starting from epoch 1")
        else:
            model, state, rng_state = restored
            rng.bit_generator.state = rng_state
            kg.add_triples(state.accepted)
            logger(f"[M4] resumed at epoch {state.epoch} ({len(state.accepted)} accepted conclusions)")

    epoch_log = None
    if output_dir is not None:
        output_dir.mkdir(parents=True, exist_ok=True)
        epoch_log = output_dir / EPOCH_LOG_FILE
        _write_epoch_log(epoch_log, state.records, append=False)

    optimizer = AdaGrad(config.learning_rate, nne=config.nne_enabled)
    interval = config.grounding_interval
    warmup = f", warm-up {config.warmup_epochs}" if config.warmup_epochs else ""
    logger(f"[M4] training {describe_variant(config)}: N={config.epochs}, M={config.iterative_steps}{warmup}, "
           f"grounding every {interval} epochs, {len(rules)} rules, {len(kg)} triples")

    pool = None
    if config.update_contract == "hogwild" and config.workers > 1:
        pool = ThreadPoolExecutor(max_workers=config.workers)

    progress = tqdm(range(state.epoch, config.epochs), desc="train", unit="epoch",
                    initial=state.epoch, total=config.epochs,
                    disable=not config.progress or not sys.stderr.isatty())
    try:
        for epoch in progress:
            grounded = False
            if rules and config.grounds_at(epoch):
                if initial_conclusions is not None and state.groundings == 0:
                    state.conclusions = ConclusionSet.from_dict(initial_conclusions.to_dict())
                else:
                    state.conclusions = ground_rules(kg, rules, workers=config.workers, logger=log.debug)
                state.groundings += 1
                grounded = True
                logger(f"[M4] epoch {epoch + 1}: grounding #{state.groundings} → "
                       f"{state.candidate_count} candidate conclusions")

            loss = run_epoch(model, kg, state, rules, config, optimizer, rng, pool)

            promoted = []
            if rules and config.iterative_enabled:
                if config.promotion_mode == "threshold":
                    promoted = filter_conclusions(model, state, config.acceptance_threshold, kg)
                elif config.grounds_at(epoch + 1) or epoch + 1 == config.epochs:
                    promoted = promote_top_n(model, state, rules, kg)
                if promoted:
                    kg.add_triples(promoted)
                    logger(f"[M4] epoch {epoch + 1}: promoted {len(promoted)} conclusions "
                           f"(total {len(state.accepted)}, KG {len(kg)})")

            record = EpochRecord(
                epoch=epoch + 1,
                grounded=grounded,
                loss=loss.to_dict(),
                candidates=state.candidate_count,
                promoted=len(promoted),
                accepted_total=len(state.accepted),
                kg_size=len(kg),
                rule_scores=rule_mean_scores(model, state) if rules else {},
            )
            if evaluator is not None and eval_every and (epoch + 1) % eval_every == 0:
                record.metrics = evaluator(model)
            state.records.append(record)
            state.epoch = epoch + 1
            progress.set_postfix(loss=f"{loss.total:.4f}", cand=record.candidates)
            log.debug("epoch %d: %s", epoch + 1, record.loss)

            if epoch_log is not None:
                _write_epoch_log(epoch_log, [record])
            if output_dir is not None and config.checkpoint_every and state.epoch % config.checkpoint_every == 0:
                save_checkpoint(output_dir, model, state, rng)
    finally:
        progress.close()
        if pool is not None:
            pool.shutdown()

    logger(f"[M4] training done: {state.epoch} epochs, {state.groundings} groundings, "
           f"{len(state.accepted)} accepted conclusions")
    return TrainingResult(model, kg, state)
