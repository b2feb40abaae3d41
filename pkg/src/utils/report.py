import csv
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional

import pandas as pd

from src.core.config import ExperimentConfig
from src.core.safety import SafetyParams
from src.estimators.results import Summary

REPO_ROOT = Path(__file__).resolve().parents[2]
CSV_DIR = REPO_ROOT / "logs" / "csv"

ESTIMATE_COLUMNS = [
    "model", "estimator", "b", "gamma", "a_star", "n", "seed",
    "mean", "stderr", "cv", "ci_lo", "ci_hi",
    "mean_steps", "mean_variates",
    "second_moment", "truncated",
]
TIMING_COLUMN = "wall_time"
MARGIN_COLUMNS = ["y", "v", "w", "tail", "margin"]


def fmt(x: Optional[float]) -> str:
    """Six significant digits in scientific notation; blank for missing values."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.5e}"


def resolve_output(path: Optional[Path], default_name: str) -> Path:
    """Explicit path as given; otherwise logs/csv/<default_name>."""
    if path is None:
        CSV_DIR.mkdir(parents=True, exist_ok=True)
        return CSV_DIR / default_name
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_estimates(
    path: Path,
    config: ExperimentConfig,
    summaries: Mapping[float, Summary],
    safety: Optional[SafetyParams] = None,
    include_timing: bool = True,
) -> Path:
    """
    One row per level, header first.

    Everything except wall_time is a function of config and seed, so two
    runs written with include_timing=False are byte-identical.
    """
    gamma = safety.gamma if safety is not None else None
    a_star = safety.a_star if safety is not None else None
    header = ESTIMATE_COLUMNS + ([TIMING_COLUMN] if include_timing else [])

    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for b, s in summaries.items():
            row = [
                config.model.name,
                config.estimator.value,
                fmt(b), fmt(gamma), fmt(a_star),
                s.n, config.seed,
                fmt(s.mean), fmt(s.stderr), fmt(s.cv),
                fmt(s.ci95[0]), fmt(s.ci95[1]),
                fmt(s.mean_steps), fmt(s.mean_variates),
                fmt(s.second_moment), s.truncated,
            ]
            if include_timing:
                row.append(fmt(s.wall_time))
            writer.writerow(row)
    return path


def write_margins(path: Path, safety: SafetyParams) -> Path:
    """The verified grid of a calibration, one row per grid point."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(MARGIN_COLUMNS)
        for g in safety.verified_grid:
            writer.writerow([fmt(g.y), fmt(g.v), fmt(g.w), fmt(g.tail), fmt(g.margin)])
    return path


def write_frame(path: Path, frame: pd.DataFrame) -> Path:
    """Any report frame (suite table, KS results), floats in the same format."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(frame.columns))
        for row in frame.itertuples(index=False):
            writer.writerow([fmt(x) if isinstance(x, float) else x for x in row])
    return path


def read_estimates(path: Path) -> pd.DataFrame:
    return pd.read_csv(path)


def read_margins(path: Path) -> pd.DataFrame:
    return pd.read_csv(path)


def rows_for(frame: pd.DataFrame, levels: Iterable[float]) -> pd.DataFrame:
    levels = list(levels)
    return frame[frame["b"].isin(levels)].reset_index(drop=True)
