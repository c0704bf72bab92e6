from .promotion import filter_conclusions, promote_top_n, rule_mean_scores, top_n_count
from .state import EpochRecord, IterationState
from .trainer import TrainingResult, load_checkpoint, run_epoch, run_training, save_checkpoint
from .variants import describe_variant, variant_selector
