from .base import BaseScorer, ScoreGrad
from .complex import ComplExScorer
from .rotate import RotatEScorer
