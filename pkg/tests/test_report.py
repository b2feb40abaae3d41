import math

import pandas as pd
import pytest

from src.core.config import parse_config
from src.core.safety import GridMargin, SafetyParams
from src.estimators.results import RunResult, summarize
from src.utils.report import (
    ESTIMATE_COLUMNS,
    MARGIN_COLUMNS,
    TIMING_COLUMN,
    fmt,
    read_estimates,
    read_margins,
    resolve_output,
    rows_for,
    write_estimates,
    write_frame,
    write_margins,
)

CONFIG = parse_config("model=exp_diff mu=1 lambda=0.5\nestimator=siegmund\nb=4, 8\nseed=3\n")


def _summaries(wall_time=0.0):
    runs = [
        RunResult(log_R=math.log(0.2), crossed=True, steps=3, variates=3),
        RunResult(log_R=math.log(0.1), crossed=True, steps=5, variates=5),
    ]
    return {4.0: summarize(runs, wall_time=wall_time), 8.0: summarize(runs[:1] * 2, wall_time=wall_time)}


class TestFmt:
    @pytest.mark.parametrize("value,text", [
        (None, ""),
        (float("nan"), "nan"),
        (math.inf, "inf"),
        (-math.inf, "-inf"),
        (1.942e-2, "1.94200e-02"),
        (0, "0.00000e+00"),
    ])
    def test_values(self, value, text):
        assert fmt(value) == text


class TestEstimates:
    def test_columns_and_values(self, tmp_path):
        path = write_estimates(tmp_path / "est.csv", CONFIG, _summaries(1.25))
        frame = read_estimates(path)
        assert list(frame.columns) == ESTIMATE_COLUMNS + [TIMING_COLUMN]
        assert list(frame["b"]) == [4.0, 8.0]
        assert frame.loc[0, "model"] == "exp_diff"
        assert frame.loc[0, "estimator"] == "siegmund"
        assert frame.loc[0, "mean"] == pytest.approx(0.15)
        assert frame.loc[0, "seed"] == 3
        assert frame["gamma"].isna().all()
        assert frame.loc[0, TIMING_COLUMN] == pytest.approx(1.25)

    def test_deterministic_without_timing(self, tmp_path):
        a = write_estimates(tmp_path / "a.csv", CONFIG, _summaries(0.5), include_timing=False)
        b = write_estimates(tmp_path / "b.csv", CONFIG, _summaries(9.0), include_timing=False)
        assert a.read_bytes() == b.read_bytes()
        assert TIMING_COLUMN not in read_estimates(a).columns

    def test_rows_for(self, tmp_path):
        frame = read_estimates(write_estimates(tmp_path / "est.csv", CONFIG, _summaries()))
        assert list(rows_for(frame, [8.0])["b"]) == [8.0]


class TestOtherTables:
    def test_margins(self, tmp_path):
        safety = SafetyParams(
            gamma=0.5,
            a_star=-10.0,
            kappa=0.3,
            verified_grid=(GridMargin(-11.0, 0.2, 0.25, 0.1, 0.4), GridMargin(-10.0, 0.3, 0.35, 0.12, 0.45)),
        )
        frame = read_margins(write_margins(tmp_path / "m.csv", safety))
        assert list(frame.columns) == MARGIN_COLUMNS
        assert list(frame["y"]) == [-11.0, -10.0]
        assert frame.loc[1, "margin"] == pytest.approx(0.45)

    def test_frame(self, tmp_path):
        frame = pd.DataFrame({"check": ["a", "b"], "status": ["PASS", "FAIL"], "worst": [1e-12, 0.5]})
        path = write_frame(tmp_path / "f.csv", frame)
        assert path.read_text().splitlines() == ["check,status,worst", "a,PASS,1.00000e-12", "b,FAIL,5.00000e-01"]


def test_resolve_output_creates_parent(tmp_path):
    target = tmp_path / "nested" / "dir" / "out.csv"
    assert resolve_output(target, "ignored.csv") == target
    assert target.parent.is_dir()
