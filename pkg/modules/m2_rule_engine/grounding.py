"""
M2: Rule grounding: forward chaining 1 cycle (match-select-act)

현재 KG로 각 rule의 premise를 인스턴스화하고, KG에 없는 conclusion만 rule별로 모읍니다.
한 번의 호출 안에서 새 conclusion을 다시 premise로 쓰지 않습니다.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

from modules.errors import VocabularyError
from modules.m1_kg_core.graph import KnowledgeGraph, Triple
from .rules import ConclusionSet, HornRule

log = logging.getLogger(__name__)


def _check_rule(kg: KnowledgeGraph, rule_id: int, rule: HornRule):
    for r in rule.relations:
        if not 0 <= r < kg.relation_count:
            raise VocabularyError(
                f"rule {rule_id} ({rule.describe()}) uses relation id {r} outside [0, {kg.relation_count})"
            )


def ground_rule(kg: KnowledgeGraph, rule: HornRule) -> list[Triple]:
    """단일 rule의 새 conclusion (KG에 없는 것만, id 순 정렬)"""
    r_c = rule.conclusion.relation
    derived: set[Triple] = set()
    if rule.length == 1:
        r_p = rule.premise[0].relation
        for a, b in kg.pairs(r_p):
            derived.add(Triple(b, r_c, a) if rule.inverse else Triple(a, r_c, b))
    else:
        r1, r2 = rule.premise_relations
        for x, _y, z in kg.join_pairs(r1, r2):
            derived.add(Triple(x, r_c, z))
    return sorted(t for t in derived if t not in kg.triples)


def ground_rules(kg: KnowledgeGraph, rules: Sequence[HornRule], workers: int = 1,
                 logger: Optional[Callable[[str], None]] = None) -> ConclusionSet:
    """
    모든 rule을 1 cycle grounding 합니다. rule id = rules 리스트 내 위치.
    Returns: ConclusionSet (그룹 C_f + provenance)
    """
    logger = logger or log.info
    for rule_id, rule in enumerate(rules):
        _check_rule(kg, rule_id, rule)

    if workers > 1 and len(rules) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(lambda rule: ground_rule(kg, rule), rules))
    else:
        groups = [ground_rule(kg, rule) for rule in rules]

    conclusions = ConclusionSet()
    for rule_id, triples in enumerate(groups):
        conclusions.add_group(rule_id, triples)

    non_empty = sum(1 for g in groups if g)
    logger(f"[M2] grounding: {len(conclusions)} new conclusions from {non_empty}/{len(rules)} rules")
    return conclusions
