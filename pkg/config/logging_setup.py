"""
로깅 설정: 콘솔 + (선택) 파일 핸들러
"""
import logging
from typing import Optional

from config.settings import settings

LOG_FORMAT = "[%(asctime)s] %(levelname)s %(name)s: %(message)s"
DATE_FORMAT = "%H:%M:%S"


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> logging.Logger:
    """루트 로거를 한 번만 구성합니다. 재호출 시 레벨만 갱신."""
    level = (level or settings.log_level).upper()
    log_file = log_file or settings.log_file

    root = logging.getLogger()
    root.setLevel(level)

    if not getattr(root, "_kgc_configured", False):
        formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
        console = logging.StreamHandler()
        console.setFormatter(formatter)
        root.addHandler(console)
        if log_file:
            fh = logging.FileHandler(log_file, encoding="utf-8")
            fh.setFormatter(formatter)
            root.addHandler(fh)
        root._kgc_configured = True

    return root
