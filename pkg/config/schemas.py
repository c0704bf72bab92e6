"""
Pydantic 설정 스키마
MiningConfig / TrainingConfig / EvalConfig / RunConfig
"""
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from config.settings import settings


# 학습 변형(ablation) 이름: trainer.variants.variant_selector 참고
VARIANTS = ("no_nne", "no_l2", "no_il", "no_dc", "no_rc", "ac", "wc", "top_n")

DEFAULT_SWEEP_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(11))


# ─── Mining ───────────────────────────────────────────────────
class MiningConfig(BaseModel):
    """Horn rule mining 설정"""
    max_length: int = Field(2, ge=1, le=2, description="premise atom 최대 개수 (1 또는 2)")
    min_confidence: float = Field(0.8, gt=0.0, description="confidence 하한 (1 초과 시 결과 없음)")
    min_support: int = Field(2, ge=1, description="support 하한")
    confidence_kind: Literal["standard", "pca"] = Field("pca", description="confidence 종류")
    pca_direction: Literal["subject", "object"] = Field("subject", description="PCA 분모 방향")
    workers: int = Field(1, ge=1)


# ─── Training ─────────────────────────────────────────────────
class TrainingConfig(BaseModel):
    """임베딩 학습 + 반복 학습 설정"""
    dim: int = Field(300, ge=1, description="임베딩 차원 d")
    learning_rate: float = Field(1e-3, gt=0.0, description="AdaGrad 학습률 γ")
    negatives: int = Field(10, ge=1, description="positive당 negative 수 η")
    l2_coefficient: float = Field(3e-5, ge=0.0, description="l2 계수 μ")
    init_scale: float = Field(0.1, gt=0.0, description="초기화 표준편차")

    scorer_kind: Literal["complex", "rotate"] = "complex"
    rotate_margin: float = Field(12.0, gt=0.0, description="RotatE margin")

    nne_enabled: bool = True
    l2_enabled: bool = True
    dc_loss_enabled: bool = True
    rc_loss_enabled: bool = True
    iterative_enabled: bool = True
    conclusion_label_mode: Literal["rule_losses", "all_positive", "weighted"] = "rule_losses"
    promotion_mode: Literal["threshold", "top_n"] = "threshold"
    ablations: tuple[str, ...] = Field((), description="variant 이름 목록")

    epochs: int = Field(1000, ge=1, description="N")
    iterative_steps: int = Field(5, ge=1, description="M")
    warmup_epochs: int = Field(0, ge=0, description="첫 grounding 전에 triple만으로 학습하는 epoch 수")
    acceptance_threshold: float = Field(0.99, gt=0.5, description="1 초과 시 promotion 비활성")
    batch_size: int = Field(1000, ge=1)
    conclusion_batch_fraction: Optional[float] = Field(
        None, gt=0.0, lt=1.0, description="minibatch 중 conclusion 비율. None이면 |C|/(|T|+|C|)"
    )
    rule_loss_scope: Literal["batch", "group"] = Field(
        "batch", description="batch: minibatch 몫의 conclusion만, group: 매 step rule 그룹 전체"
    )

    seed: int = 0
    update_contract: Literal["deterministic", "hogwild"] = "deterministic"
    workers: int = Field(1, ge=1)
    checkpoint_every: int = Field(0, ge=0, description="0이면 checkpoint 없음")
    progress: bool = True

    @field_validator("ablations", mode="before")
    @classmethod
    def _split_ablations(cls, v):
        if isinstance(v, str):
            v = [s.strip() for s in v.split(",") if s.strip()]
        return tuple(v)

    @field_validator("ablations")
    @classmethod
    def _known_ablations(cls, v):
        unknown = [a for a in v if a not in VARIANTS]
        if unknown:
            raise ValueError(f"unknown variant(s) {unknown}. Available: {list(VARIANTS)}")
        return v

    @model_validator(mode="after")
    def _check_steps(self):
        if self.warmup_epochs >= self.epochs:
            raise ValueError(f"warmup_epochs ({self.warmup_epochs}) must be below epochs (N={self.epochs})")
        if self.iterative_steps > self.epochs - self.warmup_epochs:
            raise ValueError(
                f"iterative_steps (M={self.iterative_steps}) must not exceed the "
                f"{self.epochs - self.warmup_epochs} epochs after warm-up"
            )
        return self

    @property
    def effective_l2(self) -> float:
        return self.l2_coefficient if self.l2_enabled else 0.0

    @property
    def grounding_interval(self) -> int:
        """⌊(N − warm-up) / M⌋"""
        return max(1, (self.epochs - self.warmup_epochs) // self.iterative_steps)

    def grounds_at(self, epoch: int) -> bool:
        """0부터 센 epoch 시작 시 grounding 여부. 반복 학습이 꺼져 있으면 warm-up 직후 한 번만"""
        offset = epoch - self.warmup_epochs
        if offset < 0:
            return False
        if not self.iterative_enabled:
            return offset == 0
        return offset % self.grounding_interval == 0


# ─── Evaluation ───────────────────────────────────────────────
class EvalConfig(BaseModel):
    filtered: bool = Field(True, description="False면 raw ranking")
    every: int = Field(0, ge=0, description="K epoch마다 validation 평가 (0이면 없음)")
    workers: int = Field(1, ge=1)
    sweep_thresholds: tuple[float, ...] = DEFAULT_SWEEP_THRESHOLDS

    @field_validator("sweep_thresholds", mode="before")
    @classmethod
    def _split_thresholds(cls, v):
        if isinstance(v, str):
            v = [float(s) for s in v.split(",") if s.strip()]
        return tuple(v)


# ─── Paths / Run ──────────────────────────────────────────────
class PathsConfig(BaseModel):
    train: Optional[Path] = None
    valid: Optional[Path] = None
    test: Optional[Path] = None
    rules: Optional[Path] = Field(None, description="지정 시 mining 생략")


class RunConfig(BaseModel):
    """CLI / pipeline 실행 설정 전체"""
    paths: PathsConfig = Field(default_factory=PathsConfig)
    mining: MiningConfig = Field(default_factory=MiningConfig)
    train: TrainingConfig = Field(default_factory=TrainingConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    output_dir: Path = Field(default_factory=lambda: settings.output_dir)
    seed: int = Field(default_factory=lambda: settings.seed)
    workers: int = Field(default_factory=lambda: settings.workers, ge=1)
    resume: bool = False

    @model_validator(mode="after")
    def _propagate(self):
        # 단일 seed / worker 수를 하위 설정으로 전달
        self.train.seed = self.seed
        self.train.workers = self.workers
        self.mining.workers = self.workers
        self.eval.workers = self.workers
        return self


# ─── Synthetic dataset ────────────────────────────────────────
class SynthConfig(BaseModel):
    """planted-rule 합성 데이터셋 설정"""
    entity_count: int = Field(200, ge=10)
    pairs_per_rule: int = Field(300, ge=10, description="rule당 premise 인스턴스 수")
    rule_lengths: tuple[int, ...] = Field((1, 2), description="rule별 길이 (confidences 길이에 맞춰 순환)")
    rule_confidences: tuple[float, ...] = Field((1.0, 0.8), description="rule별 실제 confidence")
    holdout_fraction: float = Field(0.2, ge=0.0, lt=1.0, description="학습에서 빼는 참 conclusion 비율")
    false_fraction: float = Field(0.05, ge=0.0, lt=1.0, description="confidence 1.0 rule의 거짓 premise 비율")
    valid_share: float = Field(0.25, ge=0.0, lt=1.0, description="held-out 중 valid로 보내는 비율")
    noise_triples: int = Field(200, ge=0, description="rule과 무관한 배경 triple 수")
    seed: int = 0

    @field_validator("rule_lengths", "rule_confidences", mode="before")
    @classmethod
    def _split_list(cls, v):
        if isinstance(v, str):
            v = [s.strip() for s in v.split(",") if s.strip()]
        return tuple(v)

    @field_validator("rule_lengths")
    @classmethod
    def _check_lengths(cls, v):
        if not v or any(int(x) not in (1, 2) for x in v):
            raise ValueError("rule_lengths must be a non-empty list of 1 or 2")
        return tuple(int(x) for x in v)

    @field_validator("rule_confidences")
    @classmethod
    def _check_confidences(cls, v):
        if not v or any(not 0.0 < float(c) <= 1.0 for c in v):
            raise ValueError("rule_confidences must be a non-empty list in (0, 1]")
        return tuple(float(c) for c in v)
