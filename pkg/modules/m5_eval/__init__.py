from .ranking import METRIC_NAMES, RankResult, evaluate, metrics_from_ranks, rank_all, rank_entities
from .report import MetricsStore, format_metrics_table, load_metrics_csv, metrics_frame, per_iteration_curve
from .sweep import confidence_sweep, export_sweep, make_sweep_runner
