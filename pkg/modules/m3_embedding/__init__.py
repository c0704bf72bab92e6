from .model import EmbeddingModel, expit, probability, score, sigmoid
from .losses import (
    LabeledBatch,
    LabeledExample,
    LossBreakdown,
    SparseGradients,
    conclusion_scores,
    dc_loss,
    gradients,
    logistic_loss,
    rc_loss,
    total_objective,
)
from .optimizer import AdaGrad
from .sampling import sample_negative_batch, sample_negatives
from .scorer_router import get_scorer, list_scorers
