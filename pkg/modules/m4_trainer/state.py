"""
M4: 반복 학습 상태 (IterationState) + epoch 기록
"""
from dataclasses import asdict, dataclass, field

from modules.m1_kg_core.graph import Triple
from modules.m2_rule_engine.rules import ConclusionSet


@dataclass
class EpochRecord:
    epoch: int                      # 1부터
    grounded: bool
    loss: dict
    candidates: int
    promoted: int
    accepted_total: int
    kg_size: int
    rule_scores: dict[str, float] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EpochRecord":
        return cls(**data)


@dataclass
class IterationState:
    """
    epoch: 완료한 epoch 수
    conclusions: 마지막 grounding 결과 (candidate + 이번 grounding 이후 accepted)
    accepted: 누적 promoted triple (C_t), promotion 순서 유지
    """
    epoch: int = 0
    conclusions: ConclusionSet = field(default_factory=ConclusionSet)
    accepted: list[Triple] = field(default_factory=list)
    records: list[EpochRecord] = field(default_factory=list)
    groundings: int = 0

    @property
    def candidate_count(self) -> int:
        return len(self.conclusions.candidates())

    def record_promotion(self, promoted: list[Triple]):
        self.accepted.extend(promoted)

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "groundings": self.groundings,
            "conclusions": self.conclusions.to_dict(),
            "accepted": [list(t) for t in self.accepted],
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IterationState":
        return cls(
            epoch=int(data["epoch"]),
            conclusions=ConclusionSet.from_dict(data.get("conclusions", {})),
            accepted=[Triple(*t) for t in data.get("accepted", [])],
            records=[EpochRecord.from_dict(r) for r in data.get("records", [])],
            groundings=int(data.get("groundings", 0)),
        )
