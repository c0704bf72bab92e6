"""
M1: 지식그래프 저장소 (kg-core)
dict 기반 triple store + join 인덱스

- triples: 중복 없는 Triple 집합
- index_by_relation: relation → [(head, tail)]
- index_head_rel: (head, relation) → {tail}
- index_tail_rel: (tail, relation) → {head}   (head 예측 ranking / grounding 용)

학습 epoch 동안은 읽기 전용, epoch 사이(conclusion promotion)에만 변경됩니다.
"""
import threading
from collections import defaultdict
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

from modules.errors import BoundsError

_EMPTY: frozenset = frozenset()


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


class KnowledgeGraph:
    """(head, relation, tail) 정수 id triple 저장소"""

    def __init__(self, entity_count: int, relation_count: int,
                 triples: Iterable[tuple[int, int, int]] = (), vocab=None):
        self.entity_count = entity_count
        self.relation_count = relation_count
        self.vocab = vocab
        self.load_report = None

        self.triples: set[Triple] = set()
        self.index_by_relation: dict[int, list[tuple[int, int]]] = defaultdict(list)
        self.index_head_rel: dict[tuple[int, int], set[int]] = defaultdict(set)
        self.index_tail_rel: dict[tuple[int, int], set[int]] = defaultdict(set)

        self._array: Optional[np.ndarray] = None
        self._write_lock = threading.Lock()
        self.add_triples(triples)

    # ── 기본 프로토콜 ──────────────────────────────────────────

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, triple) -> bool:
        return tuple(triple) in self.triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    def __repr__(self) -> str:
        return (f"KnowledgeGraph(entities={self.entity_count}, relations={self.relation_count}, "
                f"triples={len(self.triples)})")

    # ── 변경 ────────────────────────────────────────────────────

    def check_bounds(self, head: int, relation: int, tail: int):
        if not (0 <= head < self.entity_count and 0 <= tail < self.entity_count):
            raise BoundsError(
                f"entity id out of range in ({head}, {relation}, {tail}); entity_count={self.entity_count}"
            )
        if not 0 <= relation < self.relation_count:
            raise BoundsError(
                f"relation id out of range in ({head}, {relation}, {tail}); relation_count={self.relation_count}"
            )

    def add_triples(self, new: Iterable[tuple[int, int, int]]) -> int:
        """중복은 건너뛰고 모든 인덱스를 갱신합니다. Returns: 실제 삽입 건수"""
        batch = [Triple(int(h), int(r), int(t)) for h, r, t in new]
        for triple in batch:
            self.check_bounds(*triple)

        inserted = 0
        with self._write_lock:
            for triple in batch:
                if triple in self.triples:
                    continue
                h, r, t = triple
                self.triples.add(triple)
                self.index_by_relation[r].append((h, t))
                self.index_head_rel[(h, r)].add(t)
                self.index_tail_rel[(t, r)].add(h)
                inserted += 1
            if inserted:
                self._array = None
        return inserted

    # ── 조회 ────────────────────────────────────────────────────

    def tails(self, head: int, relation: int) -> set[int] | frozenset:
        return self.index_head_rel.get((head, relation), _EMPTY)

    def heads(self, tail: int, relation: int) -> set[int] | frozenset:
        return self.index_tail_rel.get((tail, relation), _EMPTY)

    def pairs(self, relation: int) -> list[tuple[int, int]]:
        return self.index_by_relation.get(relation, [])

    def relations(self) -> list[int]:
        """triple이 하나 이상 있는 relation id (오름차순)"""
        return sorted(r for r, pairs in self.index_by_relation.items() if pairs)

    def join_pairs(self, r1: int, r2: int) -> list[tuple[int, int, int]]:
        """(x, r1, y) ∧ (y, r2, z)를 만족하는 모든 (x, y, z) 경로"""
        for r in (r1, r2):
            if not 0 <= r < self.relation_count:
                raise BoundsError(f"relation id {r} out of range [0, {self.relation_count})")
        paths = []
        for x, y in self.pairs(r1):
            for z in self.tails(y, r2):
                paths.append((x, y, z))
        return paths

    def triples_array(self) -> np.ndarray:
        """(n, 3) int64 배열: id 순 정렬, 삽입 시 캐시 무효화"""
        if self._array is None:
            if self.triples:
                arr = np.array(sorted(self.triples), dtype=np.int64)
            else:
                arr = np.empty((0, 3), dtype=np.int64)
            arr.setflags(write=False)
            self._array = arr
        return self._array

    # ── 파생 그래프 ─────────────────────────────────────────────

    def copy(self) -> "KnowledgeGraph":
        kg = KnowledgeGraph(self.entity_count, self.relation_count, sorted(self.triples), vocab=self.vocab)
        kg.load_report = self.load_report
        return kg

    @classmethod
    def union(cls, *graphs: "KnowledgeGraph") -> "KnowledgeGraph":
        """평가 filter 집합 (train ∪ valid ∪ test)"""
        graphs = [g for g in graphs if g is not None]
        if not graphs:
            raise ValueError("union() needs at least one graph")
        entity_count = max(g.entity_count for g in graphs)
        relation_count = max(g.relation_count for g in graphs)
        merged = cls(entity_count, relation_count, vocab=graphs[0].vocab)
        for g in graphs:
            merged.add_triples(sorted(g.triples))
        return merged

    def view(self) -> "GraphView":
        return GraphView(self)


class GraphView:
    """여러 worker가 공유하는 읽기 전용 view"""

    __slots__ = ("_kg",)

    def __init__(self, kg: KnowledgeGraph):
        self._kg = kg

    entity_count = property(lambda self: self._kg.entity_count)
    relation_count = property(lambda self: self._kg.relation_count)
    vocab = property(lambda self: self._kg.vocab)

    def __len__(self) -> int:
        return len(self._kg)

    def __contains__(self, triple) -> bool:
        return triple in self._kg

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._kg)

    def tails(self, head: int, relation: int) -> frozenset:
        return frozenset(self._kg.tails(head, relation))

    def heads(self, tail: int, relation: int) -> frozenset:
        return frozenset(self._kg.heads(tail, relation))

    def pairs(self, relation: int) -> tuple[tuple[int, int], ...]:
        return tuple(self._kg.pairs(relation))

    def relations(self) -> list[int]:
        return self._kg.relations()

    def join_pairs(self, r1: int, r2: int) -> list[tuple[int, int, int]]:
        return self._kg.join_pairs(r1, r2)

    def triples_array(self) -> np.ndarray:
        return self._kg.triples_array()
