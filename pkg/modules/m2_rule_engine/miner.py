"""
M2: Rule mining: closed Horn rule (length ≤ 2)

- support / body_count는 premise의 서로 다른 (x, z) 쌍 단위로 집계
- standard confidence = support / (premise 인스턴스 수)
- PCA confidence = support / (x가 이미 r_c 사실을 하나 이상 가진 premise 인스턴스 수)
- conclusion이 자기 premise triple과 같아지는 인스턴스는 세지 않음 (r(x,y) ⇒ r(x,y) 방지)
"""
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional

from config.schemas import MiningConfig
from modules.m1_kg_core.graph import KnowledgeGraph
from .rules import HornRule

log = logging.getLogger(__name__)

# 쌍마다 보관하는 중간변수 y 후보 수. 제외되는 값은 최대 2개(x, z)이므로 3개면 충분
_MAX_WITNESSES = 3


class _MiningContext:
    """mining 전체에서 공유하는 읽기 전용 보조 인덱스"""

    def __init__(self, kg: KnowledgeGraph, config: MiningConfig):
        self.kg = kg
        self.config = config
        self.pair_relations: dict[tuple[int, int], set[int]] = defaultdict(set)
        self.out_relations: dict[int, set[int]] = defaultdict(set)
        self.subjects: dict[int, set[int]] = defaultdict(set)
        self.objects: dict[int, set[int]] = defaultdict(set)
        for h, r, t in kg.triples:
            self.pair_relations[(h, t)].add(r)
            self.out_relations[h].add(r)
            self.subjects[r].add(h)
            self.objects[r].add(t)

    def pca_holds(self, r_c: int, x: int, z: int) -> bool:
        """PCA 분모 조건: subject 방향 ∃z' (x,r_c,z'), object 방향 ∃x' (x',r_c,z)"""
        if self.config.pca_direction == "subject":
            return x in self.subjects.get(r_c, ())
        return z in self.objects.get(r_c, ())

    def make_rule(self, template: HornRule, support: int, body: int, pca_body: int) -> Optional[HornRule]:
        cfg = self.config
        denominator = pca_body if cfg.confidence_kind == "pca" else body
        if support < cfg.min_support or denominator == 0:
            return None
        confidence = support / denominator
        if confidence < cfg.min_confidence:
            return None
        return template.with_stats(confidence, support, denominator)


def _mine_length1(ctx: _MiningContext, r_p: int) -> list[HornRule]:
    rules = []
    pairs = ctx.kg.pairs(r_p)
    for inverse in (False, True):
        support: dict[int, int] = defaultdict(int)
        for a, b in pairs:
            # direct: (x,y) = (a,b) / inverse: premise (y,r_p,x) 이므로 (x,y) = (b,a)
            x, y = (b, a) if inverse else (a, b)
            for r_c in ctx.pair_relations.get((x, y), ()):
                if r_c == r_p and (not inverse or x == y):
                    continue
                support[r_c] += 1

        for r_c in sorted(support):
            if support[r_c] < ctx.config.min_support:
                continue
            body = pca_body = 0
            for a, b in pairs:
                x, y = (b, a) if inverse else (a, b)
                if r_c == r_p and x == y:
                    continue
                body += 1
                if ctx.pca_holds(r_c, x, y):
                    pca_body += 1
            template = HornRule.length1(r_p, r_c, inverse=inverse)
            rule = ctx.make_rule(template, support[r_c], body, pca_body)
            if rule is not None:
                rules.append(rule)
    return rules


def _witness_ok(witnesses: list[int], r1: int, r2: int, r_c: int, x: int, z: int) -> bool:
    """(x, z) 쌍에 tautology가 아닌 중간변수 y가 하나라도 있는지"""
    for y in witnesses:
        if r_c == r1 and y == z:
            continue
        if r_c == r2 and y == x:
            continue
        return True
    return False


def _mine_length2(ctx: _MiningContext, r1: int) -> list[HornRule]:
    kg = ctx.kg
    # r2 → {(x, z) → [y, ...]}
    paths: dict[int, dict[tuple[int, int], list[int]]] = defaultdict(dict)
    for x, y in kg.pairs(r1):
        for r2 in ctx.out_relations.get(y, ()):
            bucket = paths[r2]
            for z in kg.tails(y, r2):
                witnesses = bucket.setdefault((x, z), [])
                if len(witnesses) < _MAX_WITNESSES:
                    witnesses.append(y)

    rules = []
    for r2 in sorted(paths):
        body_pairs = paths[r2]
        support: dict[int, int] = defaultdict(int)
        for (x, z), witnesses in body_pairs.items():
            for r_c in ctx.pair_relations.get((x, z), ()):
                if _witness_ok(witnesses, r1, r2, r_c, x, z):
                    support[r_c] += 1

        for r_c in sorted(support):
            if support[r_c] < ctx.config.min_support:
                continue
            body = pca_body = 0
            special = r_c in (r1, r2)
            for (x, z), witnesses in body_pairs.items():
                if special and not _witness_ok(witnesses, r1, r2, r_c, x, z):
                    continue
                body += 1
                if ctx.pca_holds(r_c, x, z):
                    pca_body += 1
            template = HornRule.length2(r1, r2, r_c)
            rule = ctx.make_rule(template, support[r_c], body, pca_body)
            if rule is not None:
                rules.append(rule)
    return rules


def _run_per_relation(fn, ctx: _MiningContext, relations: list[int]) -> list[HornRule]:
    if ctx.config.workers > 1 and len(relations) > 1:
        with ThreadPoolExecutor(max_workers=ctx.config.workers) as pool:
            chunks = list(pool.map(lambda r: fn(ctx, r), relations))
    else:
        chunks = [fn(ctx, r) for r in relations]
    return [rule for chunk in chunks for rule in chunk]


def mine_rules(kg: KnowledgeGraph, config: Optional[MiningConfig] = None,
               logger: Optional[Callable[[str], None]] = None) -> list[HornRule]:
    """
    closed Horn rule을 mining 합니다.
    Returns: confidence ≥ min_confidence, support ≥ min_support 인 rule (정렬된 순서)
    """
    logger = logger or log.info
    config = config or MiningConfig()
    if len(kg) == 0:
        logger("[M2] empty graph, no rules mined")
        return []

    ctx = _MiningContext(kg, config)
    relations = kg.relations()

    rules = _run_per_relation(_mine_length1, ctx, relations)
    n_len1 = len(rules)
    if config.max_length >= 2:
        rules += _run_per_relation(_mine_length2, ctx, relations)

    rules.sort(key=HornRule.sort_key)
    logger(f"[M2] mined {len(rules)} rules ({n_len1} length-1, {len(rules) - n_len1} length-2; "
           f"{config.confidence_kind} confidence ≥ {config.min_confidence}, support ≥ {config.min_support})")
    return rules


def dedupe_rules(rules: Iterable[HornRule]) -> list[HornRule]:
    """
    - 완전 중복 rule 제거 (먼저 나온 것 유지)
    - 모든 relation이 length-1 rule들의 relation 합집합에 포함되는 length-2 rule 제거
    """
    unique: list[HornRule] = []
    seen = set()
    for rule in rules:
        if rule.key in seen:
            continue
        seen.add(rule.key)
        unique.append(rule)

    short_relations: set[int] = set()
    for rule in unique:
        if rule.length == 1:
            short_relations |= rule.relations

    kept = [r for r in unique if r.length == 1 or not r.relations <= short_relations]
    if len(kept) != len(unique):
        log.info("[M2] dedupe removed %d length-2 rule(s) covered by length-1 rules", len(unique) - len(kept))
    return kept
