"""
M5: link prediction 평가 (filtered ranking)

- 테스트 triple마다 head / tail을 모든 entity로 치환해 점수를 매기고 정답 순위를 구합니다.
- filtered: train ∪ valid ∪ test에 있는 다른 정답 triple은 경쟁자에서 제외
- 동점: 동점 블록의 평균 순위 (rank = 1 + #greater + #equal / 2)
- MRR / MR / Hits@N은 head·tail 순위 전체 평균
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, NamedTuple, Optional

import numpy as np

from modules.m1_kg_core.graph import KnowledgeGraph, Triple
from modules.m3_embedding.model import EmbeddingModel

log = logging.getLogger(__name__)

HITS_AT = (1, 3, 10)
METRIC_NAMES = ("MRR", "MR") + tuple(f"Hits@{n}" for n in HITS_AT)


class RankResult(NamedTuple):
    triple: Triple
    head_rank: float
    tail_rank: float


def _rank(scores: np.ndarray, target: int, known: Iterable[int]) -> float:
    """scores 중 target의 평균-동점 순위 (known의 다른 entity는 제외)"""
    true_score = scores[target]
    keep = np.ones(len(scores), dtype=bool)
    keep[target] = False
    excluded = [e for e in known if e != target]
    if excluded:
        keep[excluded] = False
    competitors = scores[keep]
    greater = np.count_nonzero(competitors > true_score)
    equal = np.count_nonzero(competitors == true_score)
    return 1.0 + greater + equal / 2.0


def rank_entities(model: EmbeddingModel, kg_filter: Optional[KnowledgeGraph], test,
                  filtered: bool = True) -> RankResult:
    """
    단일 테스트 triple의 head / tail 순위.
    filtered=False 이거나 kg_filter가 None이면 raw 순위.
    """
    h, r, t = (int(x) for x in test)
    scorer = model.scorer
    use_filter = filtered and kg_filter is not None

    tail_scores = scorer.score_tails(model, h, r)
    tail_rank = _rank(tail_scores, t, kg_filter.tails(h, r) if use_filter else ())

    head_scores = scorer.score_heads(model, r, t)
    head_rank = _rank(head_scores, h, kg_filter.heads(t, r) if use_filter else ())
    return RankResult(Triple(h, r, t), head_rank, tail_rank)


def rank_all(model: EmbeddingModel, test, kg_filter: Optional[KnowledgeGraph] = None,
             filtered: bool = True, workers: int = 1) -> list[RankResult]:
    triples = [Triple(*map(int, x)) for x in (sorted(test) if isinstance(test, KnowledgeGraph) else test)]
    if workers > 1 and len(triples) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda x: rank_entities(model, kg_filter, x, filtered), triples))
    return [rank_entities(model, kg_filter, x, filtered) for x in triples]


def metrics_from_ranks(results: Iterable[RankResult]) -> dict[str, float]:
    ranks = [rank for res in results for rank in (res.head_rank, res.tail_rank)]
    if not ranks:
        raise ValueError("no ranks to aggregate")
    n = len(ranks)
    metrics = {
        "MRR": math.fsum(1.0 / rank for rank in ranks) / n,
        "MR": math.fsum(ranks) / n,
    }
    for k in HITS_AT:
        metrics[f"Hits@{k}"] = sum(1 for rank in ranks if rank <= k) / n
    return metrics


def evaluate(model: EmbeddingModel, test, kg_filter: Optional[KnowledgeGraph] = None,
             filtered: bool = True, workers: int = 1,
             logger: Optional[Callable[[str], None]] = None) -> dict[str, float]:
    """
    테스트 split의 MRR / MR / Hits@1,3,10 (head·tail 평균).
    모델과 그래프는 읽기만 합니다.
    """
    logger = logger or log.info
    if len(test) == 0:
        raise ValueError("evaluate needs a non-empty test split")
    results = rank_all(model, test, kg_filter, filtered, workers)
    metrics = metrics_from_ranks(results)
    mode = "filtered" if filtered and kg_filter is not None else "raw"
    logger(f"[M5] {mode} eval on {len(results)} triples: MRR {metrics['MRR']:.4f}, "
           f"Hits@1 {metrics['Hits@1']:.4f}, Hits@10 {metrics['Hits@10']:.4f}")
    return metrics
