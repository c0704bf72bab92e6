"""
M6: planted-rule 합성 데이터셋 생성기

rule i (confidence c_i)마다 전용 relation을 만들고:
- length 1:  rel{i}_premise(x,y)                       ⇒ rel{i}_conclusion(x,y)
- length 2:  rel{i}_first(x,y) ∧ rel{i}_second(y,z)    ⇒ rel{i}_conclusion(x,z)
entity는 subject(앞 절반) / object(뒤 절반) 유형으로 나뉘고 참 conclusion의 tail은 object입니다.
premise 인스턴스의 c_i 비율만 conclusion이 참입니다. c_i = 1이면 false_fraction만큼
tail이 subject 유형인 거짓 premise를 추가하므로 거짓 conclusion은 유형 구조와 어긋납니다.
rule 통계는 생성된 premise 기준(confidence = 참 수 / premise 수)이고 planted c_i는 truth.json에 남습니다.
참 conclusion 중 holdout_fraction은 학습에서 빼서 valid/test로 보냅니다.

출력: train.tsv, valid.tsv, test.tsv, rules.txt, truth.json
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from config.schemas import SynthConfig
from modules.m1_kg_core.graph import KnowledgeGraph, Triple
from modules.m1_kg_core.loader import save_triples
from modules.m1_kg_core.vocab import Vocabulary
from modules.m2_rule_engine.rule_io import serialize_rules
from modules.m2_rule_engine.rules import HornRule

log = logging.getLogger(__name__)

TRUTH_FILE = "truth.json"
RULES_FILE = "rules.txt"
SPLIT_FILES = {"train": "train.tsv", "valid": "valid.tsv", "test": "test.tsv"}


@dataclass
class SyntheticDataset:
    vocab: Vocabulary
    train: list[Triple] = field(default_factory=list)
    valid: list[Triple] = field(default_factory=list)
    test: list[Triple] = field(default_factory=list)
    rules: list[HornRule] = field(default_factory=list)
    held_out: dict[int, list[Triple]] = field(default_factory=dict)     # rule id → 참, 학습 제외
    false: dict[int, list[Triple]] = field(default_factory=dict)        # rule id → 거짓 conclusion
    planted: dict[int, float] = field(default_factory=dict)             # rule id → 설정한 confidence

    def graph(self, split: str) -> KnowledgeGraph:
        return KnowledgeGraph(self.vocab.entity_count, self.vocab.relation_count,
                              getattr(self, split), vocab=self.vocab)

    def all_held_out(self) -> list[Triple]:
        return sorted(t for group in self.held_out.values() for t in group)

    def all_false(self) -> list[Triple]:
        return sorted(t for group in self.false.values() for t in group)

    def truth(self) -> dict:
        names = self._names
        return {
            "held_out": [names(t) for t in self.all_held_out()],
            "false": [names(t) for t in self.all_false()],
            "rules": [
                {
                    "rule_id": rid,
                    "rule": rule.describe(self.vocab),
                    "confidence": rule.confidence,
                    "planted_confidence": self.planted.get(rid, rule.confidence),
                    "held_out": len(self.held_out.get(rid, [])),
                    "false": len(self.false.get(rid, [])),
                }
                for rid, rule in enumerate(self.rules)
            ],
        }

    def _names(self, t: Triple) -> list[str]:
        return [self.vocab.entities.name_of(t[0]), self.vocab.relations.name_of(t[1]),
                self.vocab.entities.name_of(t[2])]

    def write(self, output_dir: Path, logger: Optional[Callable[[str], None]] = None) -> dict[str, Path]:
        logger = logger or log.info
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        paths = {}
        for split, filename in SPLIT_FILES.items():
            paths[split] = output_dir / filename
            save_triples(self.graph(split), paths[split], self.vocab)
        paths["rules"] = output_dir / RULES_FILE
        serialize_rules(self.rules, paths["rules"], self.vocab)
        paths["truth"] = output_dir / TRUTH_FILE
        paths["truth"].write_text(json.dumps(self.truth(), indent=2, ensure_ascii=False), encoding="utf-8")
        logger(f"[M6] synthetic dataset → {output_dir} (train {len(self.train)}, valid {len(self.valid)}, "
               f"test {len(self.test)}, {len(self.rules)} rules)")
        return paths


# ─── 생성 ────────────────────────────────────────────────────

def _distinct_pairs(rng: np.random.Generator, count: int, left: np.ndarray, right: np.ndarray,
                    exclude: set) -> list[tuple[int, int]]:
    """left × right에서 서로 다른 (a, b) 쌍 count개 (a ≠ b, exclude 제외)"""
    capacity = len(left) * len(right)
    if count > capacity // 2:
        raise ValueError(f"cannot draw {count} distinct pairs from {capacity} candidates")
    pairs: list[tuple[int, int]] = []
    seen = set(exclude)
    while len(pairs) < count:
        a, b = int(rng.choice(left)), int(rng.choice(right))
        if a == b or (a, b) in seen:
            continue
        seen.add((a, b))
        pairs.append((a, b))
    return pairs


def _split_truth(count: int, confidence: float, config: SynthConfig) -> tuple[int, int]:
    """(참 conclusion 수, 추가 거짓 premise 수)"""
    if confidence >= 1.0:
        return count, int(round(config.false_fraction * count))
    return int(round(confidence * count)), 0


def generate(config: Optional[SynthConfig] = None) -> SyntheticDataset:
    config = config or SynthConfig()
    rng = np.random.default_rng(config.seed)
    vocab = Vocabulary()
    for i in range(config.entity_count):
        vocab.entity_id(f"e{i:04d}")
    entities = np.arange(config.entity_count)
    # 앞 절반은 subject, 뒤 절반은 object 유형
    subjects, objects = entities[: config.entity_count // 2], entities[config.entity_count // 2:]
    data = SyntheticDataset(vocab=vocab)

    train: set[Triple] = set()
    held_out_all: list[Triple] = []
    m = config.pairs_per_rule

    for rid, confidence in enumerate(config.rule_confidences):
        length = config.rule_lengths[rid % len(config.rule_lengths)]
        r_c_name = f"rel{rid}_conclusion"

        if length == 1:
            r_p = vocab.relation_id(f"rel{rid}_premise")
            r_c = vocab.relation_id(r_c_name)
            premises = _distinct_pairs(rng, m, subjects, objects, set())
            n_true, n_extra = _split_truth(m, confidence, config)
            # confidence 1 rule의 추가 premise: tail이 subject 유형이라 conclusion이 유형에 어긋남
            premises += _distinct_pairs(rng, n_extra, subjects, subjects, set())
            train.update(Triple(x, r_p, y) for x, y in premises)
            conclusions = [Triple(x, r_c, y) for x, y in premises]
            rule = HornRule.length1(r_p, r_c, n_true / len(premises), n_true, len(premises))
        else:
            r1 = vocab.relation_id(f"rel{rid}_first")
            r2 = vocab.relation_id(f"rel{rid}_second")
            r_c = vocab.relation_id(r_c_name)
            # hub y마다 고유한 z = g(y) (functional 관계)
            n_hubs = max(5, m // 10)
            n_true, n_extra = _split_truth(m, confidence, config)
            n_bad = -(-n_extra // 5)
            if 2 * n_hubs + n_bad > len(objects) or n_bad > len(subjects):
                raise ValueError(f"entity_count {config.entity_count} too small for a length-2 rule with {n_hubs} hubs")
            chosen = rng.choice(objects, size=2 * n_hubs + n_bad, replace=False)
            hubs, targets, bad_hubs = chosen[:n_hubs], chosen[n_hubs:2 * n_hubs], chosen[2 * n_hubs:]
            target_of = {int(y): int(z) for y, z in zip(hubs, targets)}
            # 추가 거짓 premise용 hub는 subject 유형 entity를 가리킴
            bad_targets = rng.choice(subjects, size=n_bad, replace=False)
            target_of.update((int(y), int(z)) for y, z in zip(bad_hubs, bad_targets))
            train.update(Triple(y, r2, z) for y, z in target_of.items())
            exclude = {(z, y) for y, z in target_of.items()}
            premises = _distinct_pairs(rng, m, subjects, hubs, exclude)
            premises += _distinct_pairs(rng, n_extra, subjects, bad_hubs, exclude)
            train.update(Triple(x, r1, y) for x, y in premises)
            conclusions = [Triple(x, r_c, target_of[y]) for x, y in premises]
            rule = HornRule.length2(r1, r2, r_c, n_true / len(premises), n_true, len(premises))

        # premise 순서는 무작위이므로 앞쪽 n_true개를 참으로 둡니다
        true, false = conclusions[:n_true], conclusions[n_true:]
        n_hold = int(round(config.holdout_fraction * len(true)))
        hold_idx = set(rng.choice(len(true), size=n_hold, replace=False).tolist()) if n_hold else set()
        held = [t for i, t in enumerate(true) if i in hold_idx]
        train.update(t for i, t in enumerate(true) if i not in hold_idx)

        data.rules.append(rule)
        data.planted[rid] = confidence
        data.held_out[rid] = sorted(held)
        data.false[rid] = sorted(false)
        held_out_all.extend(held)

    if config.noise_triples:
        r_noise = vocab.relation_id("noise")
        noise = _distinct_pairs(rng, config.noise_triples, entities, entities, set())
        train.update(Triple(h, r_noise, t) for h, t in noise)

    order = rng.permutation(len(held_out_all))
    n_valid = int(round(config.valid_share * len(order)))
    data.valid = sorted(held_out_all[i] for i in order[:n_valid])
    data.test = sorted(held_out_all[i] for i in order[n_valid:])
    data.train = sorted(train)
    return data
