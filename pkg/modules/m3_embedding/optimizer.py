"""
M3: AdaGrad (행 단위 sparse 갱신) + NNE projection
"""
import numpy as np

from modules.errors import NumericalError
from .losses import SparseGradients
from .model import EmbeddingModel


class AdaGrad:
    """
    acc ← acc + g²,  θ ← θ − γ · g / √acc
    accumulator는 EmbeddingModel에 함께 저장되어 checkpoint로 이어집니다.
    """

    def __init__(self, learning_rate: float, nne: bool = False):
        if learning_rate < 0:
            raise ValueError(f"learning_rate must be ≥ 0, got {learning_rate}")
        self.learning_rate = learning_rate
        self.nne = nne

    def step(self, model: EmbeddingModel, grads: SparseGradients) -> None:
        for name, ids, g in grads.items():
            if len(ids) == 0:
                continue
            param = getattr(model, name)
            acc = model.accumulators[name]
            acc[ids] += g * g
            param[ids] -= self.learning_rate * g / np.sqrt(acc[ids])

        if self.nne and len(grads.entity_ids):
            rows = grads.entity_ids
            model.entity_re[rows] = np.maximum(model.entity_re[rows], 0.0)
            model.entity_im[rows] = np.maximum(model.entity_im[rows], 0.0)

        for name, ids, _ in grads.items():
            if len(ids) and not np.isfinite(getattr(model, name)[ids]).all():
                raise NumericalError(f"non-finite values in {name} after AdaGrad step")
