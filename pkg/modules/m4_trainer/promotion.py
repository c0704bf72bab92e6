"""
M4: conclusion 승격 (promotion)

- σ(F) ≥ acceptance_threshold: accepted → KG에 삽입 (threshold 모드)
- 미만: candidate로 남아 다음 epoch에도 L_dc / L_rc로 학습
- top_n 모드: rule마다 round(|C_f| · c_f)개의 상위 점수 후보를 승격
"""
import math
from typing import Optional, Sequence

import numpy as np

from modules.m1_kg_core.graph import KnowledgeGraph, Triple
from modules.m2_rule_engine.rules import HornRule
from modules.m3_embedding.model import EmbeddingModel
from .state import IterationState


def _accept(state: IterationState, chosen: list[Triple], kg: Optional[KnowledgeGraph]) -> list[Triple]:
    if kg is not None:
        chosen = [t for t in chosen if t not in kg]
    promoted = state.conclusions.accept(chosen)
    state.record_promotion(promoted)
    return promoted


def filter_conclusions(model: EmbeddingModel, state: IterationState, threshold: float,
                       kg: Optional[KnowledgeGraph] = None) -> list[Triple]:
    """
    σ(F) ≥ threshold 인 후보를 candidate pool에서 accepted로 옮깁니다.
    threshold > 1 이면 어떤 후보도 승격되지 않습니다 (σ < 1).
    Returns: 승격된 triple (id 순)
    """
    if threshold <= 0.5:
        raise ValueError(f"acceptance threshold must be > 0.5, got {threshold}")
    candidates = state.conclusions.candidates()
    if not candidates:
        return []
    probs = model.probability(np.array(candidates, dtype=np.int64))
    chosen = [t for t, p in zip(candidates, probs) if p >= threshold]
    return _accept(state, chosen, kg)


def top_n_count(group_size: int, confidence: float) -> int:
    """round-half-up(|C_f| · c_f)"""
    return min(group_size, int(math.floor(group_size * confidence + 0.5)))


def promote_top_n(model: EmbeddingModel, state: IterationState, rules: Sequence[HornRule],
                  kg: Optional[KnowledgeGraph] = None) -> list[Triple]:
    """rule 그룹마다 점수 상위 round(|C_f| · c_f)개 후보를 승격합니다."""
    chosen: set[Triple] = set()
    for rid, group in state.conclusions.candidate_groups().items():
        n = top_n_count(len(group), rules[rid].confidence)
        if n == 0:
            continue
        scores = model.score(group)
        # 동점은 triple id 순
        order = np.lexsort((group[:, 2], group[:, 1], group[:, 0], -scores))
        chosen.update(Triple(*map(int, group[i])) for i in order[:n])
    return _accept(state, sorted(chosen), kg)


def rule_mean_scores(model: EmbeddingModel, state: IterationState) -> dict[str, float]:
    """rule id → 후보 conclusion 평균 σ(F) (epoch 기록용)"""
    out = {}
    for rid, group in state.conclusions.candidate_groups().items():
        if len(group):
            out[str(rid)] = float(np.mean(model.probability(group)))
    return out
