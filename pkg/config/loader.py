"""
설정 파일 로더: plain-text key-value 형식

형식 (UTF-8, 한 줄에 하나):
    # 주석
    paths.train = data/fb15k/train.tsv
    mining.min_confidence = 0.8
    train.dim = 300
    train.ablations = no_il, no_dc
    run.seed = 7

우선순위: 기본값 < 설정 파일 < 환경변수(KGC_OUTPUT_DIR, KGC_WORKERS) < CLI override
"""
import os
from pathlib import Path
from typing import Iterable, Optional

from pydantic import ValidationError

from config.schemas import RunConfig
from modules.errors import ConfigError, ParseError

SECTIONS = ("paths", "mining", "train", "eval", "run")


def parse_config_text(text: str, path: Optional[str] = None) -> dict[str, str]:
    """`section.key = value` 줄들을 평탄한 dict로 파싱합니다."""
    entries: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'section.key = value', got {raw!r}", path, line_no)
        key, value = (part.strip() for part in line.split("=", 1))
        _check_key(key, path, line_no)
        entries[key] = value
    return entries


def _check_key(key: str, path: Optional[str] = None, line_no: Optional[int] = None):
    section, _, name = key.partition(".")
    if section not in SECTIONS or not name:
        raise ParseError(f"unknown config key {key!r} (sections: {', '.join(SECTIONS)})", path, line_no)


def parse_overrides(overrides: Iterable[str]) -> dict[str, str]:
    """CLI `--set section.key=value` 목록 파싱"""
    entries = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        try:
            _check_key(key)
        except ParseError as e:
            raise ConfigError(str(e)) from e
        entries[key] = value
    return entries


def _nest(entries: dict[str, str]) -> dict:
    nested: dict = {}
    for key, value in entries.items():
        section, name = key.split(".", 1)
        if section == "run":
            nested[name] = value
        else:
            nested.setdefault(section, {})[name] = value
    return nested


def env_overrides() -> dict[str, str]:
    entries = {}
    if os.getenv("KGC_OUTPUT_DIR"):
        entries["run.output_dir"] = os.environ["KGC_OUTPUT_DIR"]
    if os.getenv("KGC_WORKERS"):
        entries["run.workers"] = os.environ["KGC_WORKERS"]
    return entries


def load_run_config(
    config_path: Optional[Path] = None,
    overrides: Iterable[str] = (),
    flag_values: Optional[dict[str, object]] = None,
) -> RunConfig:
    """
    설정 파일 + 환경변수 + override를 합쳐 RunConfig를 만듭니다.
    flag_values: 전용 CLI 플래그 값 ({"run.seed": 3, ...}), None 값은 무시
    """
    entries: dict[str, object] = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        entries.update(parse_config_text(path.read_text(encoding="utf-8"), str(path)))
    entries.update(env_overrides())
    entries.update(parse_overrides(overrides))
    for key, value in (flag_values or {}).items():
        if value is not None:
            _check_key(key)
            entries[key] = value

    try:
        return RunConfig.model_validate(_nest(entries))
    except ValidationError as e:
        raise ConfigError(f"invalid configuration:\n{e}") from e


def dump_run_config(config: RunConfig) -> str:
    """RunConfig를 동일한 key-value 형식으로 직렬화 (실행 기록용)"""
    lines = []
    data = config.model_dump(mode="json")
    for section in ("paths", "mining", "train", "eval"):
        for name, value in data[section].items():
            if value is None:
                continue
            if isinstance(value, list):
                value = ", ".join(str(v) for v in value)
            lines.append(f"{section}.{name} = {value}")
    for name in ("output_dir", "seed", "workers", "resume"):
        lines.append(f"run.{name} = {data[name]}")
    return "\n".join(lines) + "\n"
