"""
공통 예외 정의
모든 모듈(M1~M6)과 파이프라인이 공유하는 예외 계층
"""
from typing import Optional


class KGCError(Exception):
    """시스템 공통 기반 예외"""


class ParseError(KGCError, ValueError):
    """입력 파일 파싱 실패 (줄 번호 포함)"""

    def __init__(self, message: str, path: Optional[str] = None, line_no: Optional[int] = None):
        self.path = path
        self.line_no = line_no
        where = ""
        if path is not None:
            where = f"{path}:"
        if line_no is not None:
            where = f"{where}{line_no}: "
        elif where:
            where = f"{where} "
        super().__init__(f"{where}{message}")


class VocabularyError(KGCError, ValueError):
    """고정 vocabulary에 없는 entity/relation"""


class BoundsError(KGCError, IndexError):
    """id 범위 초과"""


class ConfigError(KGCError, ValueError):
    """설정값 오류 / 상충하는 플래그"""


class NumericalError(KGCError, FloatingPointError):
    """파라미터에 NaN/Inf 발생"""


class StageError(KGCError):
    """파이프라인 단계 실패: 실패한 단계명을 함께 보관"""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
