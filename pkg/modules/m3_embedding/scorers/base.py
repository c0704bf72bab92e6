"""
M3: Scorer 추상 인터페이스
모든 scorer(ComplEx, RotatE)가 구현해야 하는 공통 인터페이스: numpy 벡터화 기준
"""
from abc import ABC, abstractmethod
from typing import NamedTuple

import numpy as np


class ScoreGrad(NamedTuple):
    """triple별 ∂F/∂(파라미터 행): 각 항목 (n, d)"""
    head_re: np.ndarray
    head_im: np.ndarray
    rel_re: np.ndarray
    rel_im: np.ndarray
    tail_re: np.ndarray
    tail_im: np.ndarray


class BaseScorer(ABC):
    """F(h, r, t) scorer 추상 기반 클래스"""

    scorer_name: str = "base"
    # relation 행을 l2 정규화 대상으로 볼지 여부
    regularize_relations: bool = True

    @abstractmethod
    def score(self, model, h: np.ndarray, r: np.ndarray, t: np.ndarray) -> np.ndarray:
        """triple 배열 점수 F: shape (n,)"""
        ...

    @abstractmethod
    def score_grad(self, model, h: np.ndarray, r: np.ndarray, t: np.ndarray) -> ScoreGrad:
        """F의 해석적 편미분"""
        ...

    @abstractmethod
    def score_tails(self, model, h: int, r: int) -> np.ndarray:
        """(h, r, ?): 모든 entity를 tail로 둔 점수, shape (entity_count,)"""
        ...

    @abstractmethod
    def score_heads(self, model, r: int, t: int) -> np.ndarray:
        """(?, r, t): 모든 entity를 head로 둔 점수"""
        ...

    def init_relations(self, rng: np.random.Generator, count: int, dim: int,
                       scale: float) -> tuple[np.ndarray, np.ndarray]:
        return rng.normal(0.0, scale, (count, dim)), rng.normal(0.0, scale, (count, dim))
