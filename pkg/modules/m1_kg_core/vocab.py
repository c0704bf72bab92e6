"""
M1: Vocabulary: entity/relation 문자열 ↔ 연속 정수 id
"""
from pathlib import Path

from modules.errors import ParseError, VocabularyError


class _SymbolTable:
    """단일 종류(entity 또는 relation) id 매핑. id는 첫 등장 순서."""

    def __init__(self, kind: str):
        self.kind = kind
        self._ids: dict[str, int] = {}
        self._names: list[str] = []

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def intern(self, name: str, frozen: bool) -> int:
        idx = self._ids.get(name)
        if idx is not None:
            return idx
        if frozen:
            raise VocabularyError(f"unknown {self.kind} {name!r} under fixed vocabulary")
        idx = len(self._names)
        self._ids[name] = idx
        self._names.append(name)
        return idx

    def id_of(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise VocabularyError(f"unknown {self.kind} {name!r}") from None

    def name_of(self, idx: int) -> str:
        if not 0 <= idx < len(self._names):
            raise VocabularyError(f"{self.kind} id {idx} out of range [0, {len(self._names)})")
        return self._names[idx]

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def save(self, path: Path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for idx, name in enumerate(self._names):
                f.write(f"{idx}\t{name}\n")

    def load(self, path: Path):
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t", 1)
                if len(parts) != 2 or not parts[0].isdigit():
                    raise ParseError("expected 'id<TAB>name'", str(path), line_no)
                idx, name = int(parts[0]), parts[1]
                if idx != len(self._names):
                    raise ParseError(f"ids must be contiguous, expected {len(self._names)}", str(path), line_no)
                self._ids[name] = idx
                self._names.append(name)


class Vocabulary:
    """entity / relation 어휘 집합. freeze() 이후에는 새 심볼을 거부합니다."""

    ENTITY_FILE = "entities.tsv"
    RELATION_FILE = "relations.tsv"

    def __init__(self):
        self.entities = _SymbolTable("entity")
        self.relations = _SymbolTable("relation")
        self.frozen = False

    @property
    def entity_count(self) -> int:
        return len(self.entities)

    @property
    def relation_count(self) -> int:
        return len(self.relations)

    def freeze(self) -> "Vocabulary":
        self.frozen = True
        return self

    def entity_id(self, name: str, create: bool = True) -> int:
        return self.entities.intern(name, frozen=self.frozen or not create)

    def relation_id(self, name: str, create: bool = True) -> int:
        return self.relations.intern(name, frozen=self.frozen or not create)

    def save(self, directory: Path):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.entities.save(directory / self.ENTITY_FILE)
        self.relations.save(directory / self.RELATION_FILE)

    @classmethod
    def load(cls, directory: Path) -> "Vocabulary":
        directory = Path(directory)
        vocab = cls()
        vocab.entities.load(directory / cls.ENTITY_FILE)
        vocab.relations.load(directory / cls.RELATION_FILE)
        return vocab.freeze()
