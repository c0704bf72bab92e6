"""
M4: 학습 변형 선택 (ablation 이름 → TrainingConfig 플래그)
"""
from config.schemas import VARIANTS, TrainingConfig
from modules.errors import ConfigError

# variant 이름 → 덮어쓸 TrainingConfig 필드
_VARIANT_MAP: dict[str, dict] = {
    "no_nne": {"nne_enabled": False},
    "no_l2": {"l2_enabled": False},
    "no_il": {"iterative_enabled": False},
    "no_dc": {"dc_loss_enabled": False},
    "no_rc": {"rc_loss_enabled": False},
    "ac": {"conclusion_label_mode": "all_positive"},
    "wc": {"conclusion_label_mode": "weighted"},
    "top_n": {"promotion_mode": "top_n"},
}

assert set(_VARIANT_MAP) == set(VARIANTS)


def variant_selector(config: TrainingConfig) -> TrainingConfig:
    """
    config.ablations를 실제 플래그로 펼친 복사본을 돌려줍니다.
    ablations가 비어 있으면 입력과 같은 값의 복사본 (전체 방법).
    """
    ablations = set(config.ablations)
    if {"ac", "wc"} <= ablations:
        raise ConfigError("variants 'ac' and 'wc' are mutually exclusive")

    updates: dict = {}
    for name in config.ablations:
        updates.update(_VARIANT_MAP[name])

    mode = updates.get("conclusion_label_mode")
    if mode and config.conclusion_label_mode not in ("rule_losses", mode):
        raise ConfigError(
            f"variant sets conclusion_label_mode={mode} but config already has {config.conclusion_label_mode}"
        )
    return config.model_copy(update=updates)


def describe_variant(config: TrainingConfig) -> str:
    """로그용 한 줄 요약"""
    parts = [config.scorer_kind]
    if config.conclusion_label_mode == "all_positive":
        parts.append("AC")
    elif config.conclusion_label_mode == "weighted":
        parts.append("WC")
    if config.iterative_enabled:
        parts.append("IL" if config.promotion_mode == "threshold" else "IL(top-n)")
    dropped = [label for flag, label in (("nne_enabled", "NNE"), ("l2_enabled", "l2"),
                                         ("dc_loss_enabled", "L_dc"), ("rc_loss_enabled", "L_rc"))
               if not getattr(config, flag)]
    text = "+".join(parts)
    return f"{text} w/o {', '.join(dropped)}" if dropped else text
