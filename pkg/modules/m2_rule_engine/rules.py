"""
M2: Horn rule / conclusion 자료형

지원하는 closed rule 형태:
    length 1:  r_p(x,y) => r_c(x,y)        r_p(y,x) => r_c(x,y)  (inverse)
    length 2:  r_p1(x,y) & r_p2(y,z) => r_c(x,z)
"""
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, NamedTuple, Optional

import numpy as np

from modules.m1_kg_core.graph import Triple

VARIABLES = ("x", "y", "z")


class Atom(NamedTuple):
    relation: int
    arg1: str
    arg2: str


_LENGTH1_SHAPES = {(("x", "y"),), (("y", "x"),)}
_LENGTH2_SHAPE = (("x", "y"), ("y", "z"))


@dataclass(frozen=True)
class HornRule:
    """body_count > 0 이면 confidence = support / body_count (반올림 오차 허용)"""
    premise: tuple[Atom, ...]
    conclusion: Atom
    confidence: float
    support: int = 0
    body_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "premise", tuple(Atom(*a) for a in self.premise))
        object.__setattr__(self, "conclusion", Atom(*self.conclusion))
        for atom in (*self.premise, self.conclusion):
            if atom.arg1 not in VARIABLES or atom.arg2 not in VARIABLES:
                raise ValueError(f"variables must be drawn from {VARIABLES}: {atom}")

        shape = tuple((a.arg1, a.arg2) for a in self.premise)
        if len(self.premise) == 1:
            if shape not in _LENGTH1_SHAPES or (self.conclusion.arg1, self.conclusion.arg2) != ("x", "y"):
                raise ValueError(f"length-1 rule is not closed: {self.premise} => {self.conclusion}")
        elif len(self.premise) == 2:
            if shape != _LENGTH2_SHAPE or (self.conclusion.arg1, self.conclusion.arg2) != ("x", "z"):
                raise ValueError(f"length-2 rule is not closed: {self.premise} => {self.conclusion}")
        else:
            raise ValueError(f"rule length must be 1 or 2, got {len(self.premise)}")

        if not 0.0 < self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in (0, 1], got {self.confidence}")
        if self.support < 0 or self.body_count < 0 or self.support > self.body_count:
            raise ValueError(f"need 0 <= support <= body_count, got {self.support} / {self.body_count}")
        # body_count == 0: 통계 미상 (손으로 쓴 rule 등)
        if self.body_count and abs(self.confidence - self.support / self.body_count) > 0.5 / self.body_count + 1e-12:
            raise ValueError(
                f"confidence {self.confidence} disagrees with support / body_count = "
                f"{self.support} / {self.body_count}"
            )

    # ── 생성 헬퍼 ──────────────────────────────────────────────

    @classmethod
    def length1(cls, r_p: int, r_c: int, confidence: float = 1.0, support: int = 0,
                body_count: int = 0, inverse: bool = False) -> "HornRule":
        atom = Atom(r_p, "y", "x") if inverse else Atom(r_p, "x", "y")
        return cls((atom,), Atom(r_c, "x", "y"), confidence, support, body_count)

    @classmethod
    def length2(cls, r_p1: int, r_p2: int, r_c: int, confidence: float = 1.0,
                support: int = 0, body_count: int = 0) -> "HornRule":
        return cls((Atom(r_p1, "x", "y"), Atom(r_p2, "y", "z")), Atom(r_c, "x", "z"),
                   confidence, support, body_count)

    # ── 속성 ────────────────────────────────────────────────────

    @property
    def length(self) -> int:
        return len(self.premise)

    @property
    def inverse(self) -> bool:
        return self.length == 1 and self.premise[0].arg1 == "y"

    @property
    def premise_relations(self) -> tuple[int, ...]:
        return tuple(a.relation for a in self.premise)

    @property
    def relations(self) -> frozenset[int]:
        return frozenset((*self.premise_relations, self.conclusion.relation))

    @property
    def key(self) -> tuple:
        """통계를 제외한 구조적 식별자"""
        return self.premise, self.conclusion

    def sort_key(self) -> tuple:
        return self.length, self.premise_relations, self.inverse, self.conclusion.relation

    def with_stats(self, confidence: float, support: int, body_count: int) -> "HornRule":
        return replace(self, confidence=confidence, support=support, body_count=body_count)

    def describe(self, vocab=None) -> str:
        def name(r: int) -> str:
            return vocab.relations.name_of(r) if vocab is not None else str(r)

        body = " & ".join(f"{name(a.relation)}({a.arg1},{a.arg2})" for a in self.premise)
        c = self.conclusion
        return f"{body} => {name(c.relation)}({c.arg1},{c.arg2})"

    def __str__(self) -> str:
        return f"{self.describe()} [{self.confidence:.3f}]"


def filter_rules(rules: Iterable[HornRule], min_confidence: float) -> list[HornRule]:
    """confidence threshold로 재필터링 (threshold sweep 용)"""
    return [r for r in rules if r.confidence >= min_confidence]


# ─── Conclusions ──────────────────────────────────────────────

class ConclusionState(str, Enum):
    CANDIDATE = "candidate"
    ACCEPTED = "accepted"


class ConclusionSet:
    """
    rule별 conclusion 그룹 C_f + conclusion 상태 + provenance(유도한 rule id 집합)
    여러 rule이 같은 conclusion을 유도하면 각 rule 그룹에 모두 들어갑니다.
    """

    def __init__(self):
        self._groups: dict[int, list[Triple]] = {}
        self._state: dict[Triple, ConclusionState] = {}
        self._provenance: dict[Triple, set[int]] = {}

    def add_group(self, rule_id: int, triples: Iterable[tuple[int, int, int]]):
        group = self._groups.setdefault(rule_id, [])
        present = set(group)
        for t in triples:
            t = Triple(*t)
            if t in present:
                continue
            present.add(t)
            group.append(t)
            self._state.setdefault(t, ConclusionState.CANDIDATE)
            self._provenance.setdefault(t, set()).add(rule_id)

    # ── 조회 ────────────────────────────────────────────────────

    def __len__(self) -> int:
        return len(self._state)

    def __contains__(self, triple) -> bool:
        return Triple(*triple) in self._state

    @property
    def rule_ids(self) -> list[int]:
        return sorted(self._groups)

    def group(self, rule_id: int) -> tuple[Triple, ...]:
        return tuple(self._groups.get(rule_id, ()))

    @property
    def groups(self) -> dict[int, tuple[Triple, ...]]:
        return {rid: tuple(g) for rid, g in sorted(self._groups.items())}

    def state(self, triple) -> Optional[ConclusionState]:
        return self._state.get(Triple(*triple))

    def provenance(self, triple) -> frozenset[int]:
        return frozenset(self._provenance.get(Triple(*triple), ()))

    def triples(self) -> list[Triple]:
        return sorted(self._state)

    def candidates(self) -> list[Triple]:
        return sorted(t for t, s in self._state.items() if s is ConclusionState.CANDIDATE)

    def accepted(self) -> list[Triple]:
        return sorted(t for t, s in self._state.items() if s is ConclusionState.ACCEPTED)

    def candidate_groups(self) -> dict[int, np.ndarray]:
        """rule id → 후보 conclusion (k, 3) int 배열 (빈 그룹은 (0, 3))"""
        out = {}
        for rid in self.rule_ids:
            rows = [t for t in self._groups[rid] if self._state[t] is ConclusionState.CANDIDATE]
            out[rid] = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return out

    def _entries(self, include_accepted: bool) -> tuple[np.ndarray, np.ndarray]:
        rule_ids, rows = [], []
        for rid in self.rule_ids:
            for t in self._groups[rid]:
                if include_accepted or self._state[t] is ConclusionState.CANDIDATE:
                    rule_ids.append(rid)
                    rows.append(t)
        return (np.array(rule_ids, dtype=np.int64),
                np.array(rows, dtype=np.int64).reshape(-1, 3))

    def candidate_entries(self) -> tuple[np.ndarray, np.ndarray]:
        """(rule_ids, triples): 그룹 멤버십 단위로 펼친 후보 목록 (minibatch 용)"""
        return self._entries(include_accepted=False)

    def member_entries(self) -> tuple[np.ndarray, np.ndarray]:
        """candidate_entries와 같되 이번 grounding 이후 accepted 된 conclusion도 포함"""
        return self._entries(include_accepted=True)

    # ── 상태 변경 ───────────────────────────────────────────────

    def accept(self, triples: Iterable[tuple[int, int, int]]) -> list[Triple]:
        """후보를 accepted로 전환합니다. Returns: 새로 accepted 된 triple"""
        newly = []
        for t in triples:
            t = Triple(*t)
            if self._state.get(t) is ConclusionState.CANDIDATE:
                self._state[t] = ConclusionState.ACCEPTED
                newly.append(t)
        return newly

    # ── 직렬화 ──────────────────────────────────────────────────

    def to_dict(self) -> dict:
        return {
            "groups": {str(rid): [list(t) for t in g] for rid, g in sorted(self._groups.items())},
            "accepted": [list(t) for t in self.accepted()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConclusionSet":
        cs = cls()
        for rid, rows in data.get("groups", {}).items():
            cs.add_group(int(rid), rows)
        cs.accept(data.get("accepted", []))
        return cs

    def save_tsv(self, path, vocab=None):
        """rule_id<TAB>head<TAB>relation<TAB>tail<TAB>state"""
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for rid in self.rule_ids:
                for h, r, t in self._groups[rid]:
                    state = self._state[Triple(h, r, t)].value
                    if vocab is not None:
                        h_s, r_s, t_s = (vocab.entities.name_of(h), vocab.relations.name_of(r),
                                         vocab.entities.name_of(t))
                    else:
                        h_s, r_s, t_s = h, r, t
                    f.write(f"{rid}\t{h_s}\t{r_s}\t{t_s}\t{state}\n")
