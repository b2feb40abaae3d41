import sys
from pathlib import Path

import numpy as np
import pandas as pd

REPO_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO_ROOT))

from src.estimators.diagnostics import cv_trend, steps_linearity  # noqa: E402

CSV_DIR = REPO_ROOT / "logs" / "csv"
OUT_DIR = REPO_ROOT / "analysis" / "outputs"

# ---- Published estimates (mean, CI low, CI high) ----
REFERENCE = pd.DataFrame(
    [
        ("weibull_det", 10.0, 1.942e-02, 1.857e-02, 2.027e-02),
        ("weibull_det", 50.0, 1.783e-05, 1.724e-05, 1.842e-05),
        ("weibull_det", 250.0, 7.076e-13, 6.842e-13, 7.310e-13),
        ("weibull_det", 500.0, 1.897e-18, 1.797e-18, 1.997e-18),
        ("weibull_det", 650.0, 3.971e-21, 3.815e-21, 4.127e-21),
        ("pareto_mg1", 1000.0, 3.146e-05, 3.126e-05, 3.165e-05),
        ("pareto_mg1", 10000.0, 9.980e-07, 9.939e-07, 1.002e-06),
    ],
    columns=["model", "b", "ref_mean", "ref_lo", "ref_hi"],
)


def efficiency_table(df: pd.DataFrame) -> pd.DataFrame:
    """Estimates joined with the reference values, plus relative error and overlap."""
    merged = df.merge(REFERENCE, on=["model", "b"], how="left")
    merged["rel_err"] = (merged["mean"] - merged["ref_mean"]) / merged["ref_mean"]
    merged["ci_overlap"] = (merged["ci_lo"] <= merged["ref_hi"]) & (merged["ci_hi"] >= merged["ref_lo"])
    merged["work_norm_var"] = merged["cv"] ** 2 * merged["mean_variates"]
    return merged


def main(paths):
    paths = [Path(p) for p in paths] or sorted(CSV_DIR.glob("*_estimates.csv"))
    if not paths:
        print(f"No estimate CSVs found in {CSV_DIR}")
        return 1

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for path in paths:
        df = pd.read_csv(path)
        table = efficiency_table(df)
        print(f"\n=== {path.name} ===")
        print(table[["b", "mean", "cv", "mean_steps", "ref_mean", "rel_err", "ci_overlap"]].to_string(index=False))

        if len(table) >= 2:
            fit = steps_linearity(table["b"].to_numpy(), table["mean_steps"].to_numpy())
            trend = cv_trend(table["b"].to_numpy(), table["cv"].to_numpy())
            print(f"steps ~ {fit.slope:.4g} b + {fit.intercept:.4g}  (R^2 = {fit.r2:.4f})")
            slope = "n/a" if np.isnan(trend.log_slope) else f"{trend.log_slope:.3f}"
            print(f"cv {trend.first:.3g} -> {trend.last:.3g}  (log-log slope {slope}, improving={trend.improving})")

        out = OUT_DIR / f"{path.stem}_efficiency.csv"
        table.to_csv(out, index=False, float_format="%.5e")
        print(f"Saved table → {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
