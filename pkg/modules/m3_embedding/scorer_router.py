"""
M3: Scorer Router: config의 scorer_kind로 scorer 인스턴스 선택
"""
from .scorers.base import BaseScorer
from .scorers.complex import ComplExScorer
from .scorers.rotate import RotatEScorer

_SCORER_MAP = {
    "complex": ComplExScorer,
    "rotate": RotatEScorer,
}

_scorers: dict[str, BaseScorer] = {}


def get_scorer(name: str) -> BaseScorer:
    """Scorer 인스턴스를 가져오거나 생성합니다 (stateless, 공유)."""
    if name in _scorers:
        return _scorers[name]
    cls = _SCORER_MAP.get(name)
    if not cls:
        raise ValueError(f"Unknown scorer: {name}. Available: {list(_SCORER_MAP.keys())}")
    scorer = cls()
    _scorers[name] = scorer
    return scorer


def list_scorers() -> list[str]:
    return list(_SCORER_MAP.keys())
