"""
M3: EmbeddingModel: 복소 entity / relation 임베딩 + AdaGrad accumulator

Checkpoint 형식 (numpy .npz, allow_pickle 불필요):
    header            JSON 문자열 {"format": "kgc-embedding", "version": 1, "dim", "scorer_kind",
                                   "margin", "entity_count", "relation_count"}
    entity_re, entity_im, relation_re, relation_im      float64 파라미터
    acc_entity_re, acc_entity_im, acc_relation_re, acc_relation_im   AdaGrad 누적값
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from modules.errors import ParseError
from .scorer_router import get_scorer

CHECKPOINT_FORMAT = "kgc-embedding"
CHECKPOINT_VERSION = 1
PARAMETER_NAMES = ("entity_re", "entity_im", "relation_re", "relation_im")
INITIAL_ACCUMULATOR = 1e-8
# sigmoid 입력 clamp 범위
SCORE_CLAMP = 30.0


@dataclass
class EmbeddingModel:
    entity_re: np.ndarray
    entity_im: np.ndarray
    relation_re: np.ndarray
    relation_im: np.ndarray
    scorer_kind: str = "complex"
    margin: float = 12.0
    accumulators: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for name in PARAMETER_NAMES:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
            if name not in self.accumulators:
                self.accumulators[name] = np.full_like(getattr(self, name), INITIAL_ACCUMULATOR)

    @classmethod
    def initialize(cls, entity_count: int, relation_count: int, dim: int,
                   rng: np.random.Generator, scorer_kind: str = "complex",
                   init_scale: float = 0.1, nne: bool = False, margin: float = 12.0) -> "EmbeddingModel":
        scorer = get_scorer(scorer_kind)
        entity_re = rng.normal(0.0, init_scale, (entity_count, dim))
        entity_im = rng.normal(0.0, init_scale, (entity_count, dim))
        if nne:
            np.maximum(entity_re, 0.0, out=entity_re)
            np.maximum(entity_im, 0.0, out=entity_im)
        relation_re, relation_im = scorer.init_relations(rng, relation_count, dim, init_scale)
        return cls(entity_re, entity_im, relation_re, relation_im, scorer_kind=scorer_kind, margin=margin)

    # ── 속성 ────────────────────────────────────────────────────

    @property
    def dim(self) -> int:
        return self.entity_re.shape[1]

    @property
    def entity_count(self) -> int:
        return self.entity_re.shape[0]

    @property
    def relation_count(self) -> int:
        return self.relation_re.shape[0]

    @property
    def scorer(self):
        return get_scorer(self.scorer_kind)

    def parameters(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.parameters().values())

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(
            *(p.copy() for p in self.parameters().values()),
            scorer_kind=self.scorer_kind,
            margin=self.margin,
            accumulators={k: v.copy() for k, v in self.accumulators.items()},
        )

    # ── 점수 ────────────────────────────────────────────────────

    def score(self, triples) -> np.ndarray:
        triples = np.asarray(triples, dtype=np.int64)
        return self.scorer.score(self, triples[..., 0], triples[..., 1], triples[..., 2])

    def probability(self, triples) -> np.ndarray:
        return sigmoid(self.score(triples))

    # ── Checkpoint ──────────────────────────────────────────────

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "dim": self.dim,
            "scorer_kind": self.scorer_kind,
            "margin": self.margin,
            "entity_count": self.entity_count,
            "relation_count": self.relation_count,
        }
        arrays = dict(self.parameters())
        arrays.update({f"acc_{k}": v for k, v in self.accumulators.items()})
        with open(path, "wb") as f:
            np.savez(f, header=np.array(json.dumps(header, sort_keys=True)), **arrays)
        return path

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingModel":
        path = Path(path)
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header.get("format") != CHECKPOINT_FORMAT or header.get("version") != CHECKPOINT_VERSION:
                raise ParseError(f"unsupported checkpoint header {header}", str(path))
            params = [data[name].copy() for name in PARAMETER_NAMES]
            accumulators = {name: data[f"acc_{name}"].copy() for name in PARAMETER_NAMES
                            if f"acc_{name}" in data.files}
        model = cls(*params, scorer_kind=header["scorer_kind"], margin=float(header["margin"]),
                    accumulators=accumulators)
        if model.dim != header["dim"]:
            raise ParseError(f"checkpoint dim mismatch: header {header['dim']}, arrays {model.dim}", str(path))
        return model


# ─── 함수형 API ───────────────────────────────────────────────

def expit(x) -> np.ndarray:
    """수치 안정 sigmoid (clamp 없음): logistic loss 미분용"""
    return np.exp(-np.logaddexp(0.0, -np.asarray(x, dtype=np.float64)))


def sigmoid(x) -> np.ndarray:
    """σ(x), 입력을 [−30, 30]으로 clamp: 결과는 항상 (0, 1) 안"""
    x = np.clip(np.asarray(x, dtype=np.float64), -SCORE_CLAMP, SCORE_CLAMP)
    return 1.0 / (1.0 + np.exp(-x))


def score(model: EmbeddingModel, triple) -> float | np.ndarray:
    """F(h, r, t): 단일 triple이면 float"""
    out = model.score(triple)
    return float(out) if np.ndim(out) == 0 else out


def probability(model: EmbeddingModel, triple) -> float | np.ndarray:
    """σ(F(h, r, t))"""
    out = model.probability(triple)
    return float(out) if np.ndim(out) == 0 else out
