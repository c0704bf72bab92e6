"""
전역 설정: 환경변수 기반 (.env 또는 시스템 환경변수)
"""
import os
from pathlib import Path
from dataclasses import dataclass, field
from typing import Optional

# .env 파일 로드 (dotenv 선택 설치)
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

PROJECT_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = PROJECT_ROOT / "data"
OUTPUT_DIR = DATA_DIR / "runs"


@dataclass
class Settings:
    # ── Run ───────────────────────────────────────────────────────────────
    seed: int = field(default_factory=lambda: int(os.getenv("KGC_SEED", "0")))
    # 병렬 worker 수 (mining / grounding / hogwild / eval)
    workers: int = field(default_factory=lambda: int(os.getenv("KGC_WORKERS", "1")))

    # ── Logging ───────────────────────────────────────────────────────────
    log_level: str = field(default_factory=lambda: os.getenv("KGC_LOG_LEVEL", "INFO"))
    log_file: Optional[str] = field(default_factory=lambda: os.getenv("KGC_LOG_FILE"))

    # ── Paths ─────────────────────────────────────────────────────────────
    project_root: Path = PROJECT_ROOT
    data_dir: Path = DATA_DIR
    output_dir: Path = field(
        default_factory=lambda: Path(os.getenv("KGC_OUTPUT_DIR", str(OUTPUT_DIR)))
    )


settings = Settings()
