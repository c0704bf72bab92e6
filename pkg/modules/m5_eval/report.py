"""
M5: 평가 결과 출력
- 사람용 표 (tabulate, DataFrame.to_markdown)
- 기계용 CSV (split, metric, value)
- epoch 로그 → iteration 곡선 DataFrame
"""
import json
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional

import pandas as pd

from .ranking import METRIC_NAMES

# CSV 출력 컬럼 정의
CSV_COLUMNS = ["split", "metric", "value"]
METRICS_FILE = "metrics.csv"


def metrics_frame(metrics_by_split: Mapping[str, Mapping[str, float]]) -> pd.DataFrame:
    rows = []
    for split, metrics in metrics_by_split.items():
        names = [m for m in METRIC_NAMES if m in metrics] + sorted(set(metrics) - set(METRIC_NAMES))
        rows.extend({"split": split, "metric": name, "value": float(metrics[name])} for name in names)
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def format_metrics_table(frame: pd.DataFrame) -> str:
    """split × metric 표"""
    if frame.empty:
        return "(no metrics)"
    wide = frame.pivot(index="split", columns="metric", values="value")
    ordered = [m for m in METRIC_NAMES if m in wide.columns] + [m for m in wide.columns if m not in METRIC_NAMES]
    return wide[ordered].to_markdown(floatfmt=".4f")


class MetricsStore:
    """metrics CSV / 표 출력"""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def export_csv(self, metrics_by_split: Mapping[str, Mapping[str, float]],
                   filename: str = METRICS_FILE,
                   logger: Optional[Callable[[str], None]] = None) -> Path:
        """Returns: CSV 파일 경로"""
        frame = metrics_frame(metrics_by_split)
        path = self.output_dir / filename
        frame.to_csv(path, index=False, lineterminator="\n")
        if logger:
            logger(f"[M5] metrics → {path}")
        return path


def load_metrics_csv(path: Path) -> dict[str, dict[str, float]]:
    frame = pd.read_csv(path)
    out: dict[str, dict[str, float]] = {}
    for row in frame.itertuples(index=False):
        out.setdefault(row.split, {})[row.metric] = float(row.value)
    return out


# ─── iteration 곡선 ───────────────────────────────────────────

def _read_records(epoch_log) -> list[dict]:
    if isinstance(epoch_log, (str, Path)):
        with open(epoch_log, encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]
    return [r if isinstance(r, dict) else r.to_dict() for r in epoch_log]


def per_iteration_curve(epoch_log: str | Path | Iterable, only_evaluated: bool = True) -> pd.DataFrame:
    """
    epoch 로그 (jsonl 경로 또는 EpochRecord 목록)를 곡선용 표로 펼칩니다.
    컬럼: epoch, loss, candidates, promoted, accepted_total, kg_size, valid_<metric>...
    only_evaluated=True면 validation 평가가 있는 epoch만 남깁니다.
    """
    rows = []
    for rec in _read_records(epoch_log):
        row = {
            "epoch": rec["epoch"],
            "loss": rec["loss"]["total"],
            "candidates": rec["candidates"],
            "promoted": rec["promoted"],
            "accepted_total": rec["accepted_total"],
            "kg_size": rec["kg_size"],
        }
        for name, value in (rec.get("metrics") or {}).items():
            row[f"valid_{name}"] = value
        rows.append(row)
    frame = pd.DataFrame(rows)
    if only_evaluated and not frame.empty:
        metric_cols = [c for c in frame.columns if c.startswith("valid_")]
        frame = frame.dropna(subset=metric_cols, how="all") if metric_cols else frame.iloc[0:0]
    return frame.reset_index(drop=True)
