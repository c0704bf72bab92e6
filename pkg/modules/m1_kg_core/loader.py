"""
M1: TSV triple 입출력
형식: UTF-8, 한 줄에 한 triple: head<TAB>relation<TAB>tail (FB15K 배포 형식)
"""
import logging
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable, Optional

from modules.errors import ParseError
from .graph import KnowledgeGraph
from .vocab import Vocabulary

log = logging.getLogger(__name__)


@dataclass
class LoadReport:
    path: str
    lines_read: int = 0
    triples_stored: int = 0
    duplicates_dropped: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def load_triples(path: str | Path, vocab: Optional[Vocabulary] = None,
                 logger: Optional[Callable[[str], None]] = None) -> KnowledgeGraph:
    """
    TSV 파일을 읽어 KnowledgeGraph를 만듭니다.
    - vocab 미지정: 새 Vocabulary 생성 (id = 첫 등장 순서)
    - vocab 지정 (valid/test): 고정 vocabulary: 모르는 문자열이면 VocabularyError
    """
    logger = logger or log.info
    path = Path(path)
    fixed = vocab is not None
    vocab = vocab if vocab is not None else Vocabulary()
    report = LoadReport(path=str(path))

    ids: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int, int]] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            report.lines_read += 1
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", str(path), line_no)
            head, relation, tail = (s.strip() for s in fields)
            triple = (
                vocab.entity_id(head, create=not fixed),
                vocab.relation_id(relation, create=not fixed),
                vocab.entity_id(tail, create=not fixed),
            )
            if triple in seen:
                report.duplicates_dropped += 1
                continue
            seen.add(triple)
            ids.append(triple)

    kg = KnowledgeGraph(vocab.entity_count, vocab.relation_count, ids, vocab=vocab)
    report.triples_stored = len(kg)
    kg.load_report = report

    logger(f"[M1] {path.name}: {report.lines_read} lines, {report.triples_stored} triples, "
           f"{vocab.entity_count} entities, {vocab.relation_count} relations")
    if report.duplicates_dropped:
        log.warning("[M1] %s: %d duplicate triple(s) dropped", path.name, report.duplicates_dropped)
    return kg


def save_triples(kg: KnowledgeGraph, path: str | Path, vocab: Optional[Vocabulary] = None) -> int:
    """그래프를 입력과 같은 TSV 형식으로 저장합니다 (id 순). Returns: 저장 건수"""
    vocab = vocab or kg.vocab
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for h, r, t in kg.triples_array().tolist():
            if vocab is not None:
                f.write(f"{vocab.entities.name_of(h)}\t{vocab.relations.name_of(r)}\t{vocab.entities.name_of(t)}\n")
            else:
                f.write(f"{h}\t{r}\t{t}\n")
    return len(kg)
