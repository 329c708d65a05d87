"""Error metrics between estimated and true object centres."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CountMismatch, EmptyInput

AXES = ("x", "y", "z")
MAPE_GUARD_M = 1e-6


@dataclass(frozen=True)
class MatchedPair:
    truth: np.ndarray
    estimate: np.ndarray
    object_id: str


@dataclass
class ErrorReport:
    mae: float
    mse: float
    rmse: float
    mape: float
    mean_euclidean: float
    n_pairs: int
    mape_skipped: int = 0
    per_axis: Dict[str, Dict[str, float]] = field(default_factory=dict)
    per_object: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def rows(self):
        """``(metric, value, unit)`` rows in a fixed order."""
        out = [
            ("mean_euclidean", self.mean_euclidean, "m"),
            ("mse", self.mse, "m^2"),
            ("rmse", self.rmse, "m"),
            ("mae", self.mae, "m"),
            ("mape", self.mape, "percent"),
            ("mape_skipped_components", float(self.mape_skipped), "count"),
            ("n_pairs", float(self.n_pairs), "count"),
        ]
        for ax in AXES:
            out.append((f"mae_{ax}", self.per_axis[ax]["mae"], "m"))
        for ax in AXES:
            out.append((f"rmse_{ax}", self.per_axis[ax]["rmse"], "m"))
        return out


def match_estimates(truths, estimates, ids: Optional[Sequence[str]] = None) -> List[MatchedPair]:
    """Pair each truth with one estimate minimising the total Euclidean distance.

    Pairs come back in truth order.
    """
    t = np.asarray(truths, dtype=float).reshape(-1, 3)
    e = np.asarray(estimates, dtype=float).reshape(-1, 3)
    if len(t) != len(e):
        raise CountMismatch(f"{len(t)} truths vs {len(e)} estimates")
    if ids is None:
        ids = [str(i) for i in range(len(t))]
    if len(t) == 0:
        return []
    cost = np.sqrt(((t[:, None, :] - e[None, :, :]) ** 2).sum(axis=2))
    rows, cols = linear_sum_assignment(cost)
    return [MatchedPair(t[r].copy(), e[c].copy(), ids[r]) for r, c in zip(rows, cols)]


def compute_errors(pairs: Sequence[MatchedPair]) -> ErrorReport:
    """Component-wise MAE/MSE/RMSE/MAPE plus mean Euclidean distance.

    MAPE skips components whose true value is below 1e-6 m in magnitude;
    the number skipped is reported.  With everything skipped MAPE is NaN.
    """
    if len(pairs) == 0:
        raise EmptyInput("no matched pairs")
    t = np.array([p.truth for p in pairs], dtype=float)
    e = np.array([p.estimate for p in pairs], dtype=float)
    diff = t - e
    absd = np.abs(diff)
    sq = diff * diff
    mae = float(absd.mean())
    mse = float(sq.mean())
    keep = np.abs(t) >= MAPE_GUARD_M
    skipped = int((~keep).sum())
    mape = float((absd[keep] / np.abs(t[keep])).mean() * 100.0) if keep.any() else math.nan
    eucl = np.sqrt(sq.sum(axis=1))
    per_axis = {
        ax: {"mae": float(absd[:, a].mean()), "mse": float(sq[:, a].mean()),
             "rmse": math.sqrt(float(sq[:, a].mean()))}
        for a, ax in enumerate(AXES)
    }
    per_object: Dict[str, Dict[str, float]] = {}
    for p, d in zip(pairs, eucl):
        per_object.setdefault(p.object_id, {"n": 0, "sum_euclidean": 0.0})
        per_object[p.object_id]["n"] += 1
        per_object[p.object_id]["sum_euclidean"] += float(d)
    for stats in per_object.values():
        stats["mean_euclidean"] = stats.pop("sum_euclidean") / stats["n"]
    return ErrorReport(mae, mse, math.sqrt(mse), mape, float(eucl.mean()), len(pairs),
                       skipped, per_axis, per_object)


def write_metrics_csv(report: ErrorReport, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value", "unit"])
        for name, value, unit in report.rows():
            w.writerow([name, repr(float(value)), unit])


def write_per_object_csv(pairs: Sequence[MatchedPair], path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["object_id", "axis", "truth_m", "estimate_m", "abs_error_m"])
        for p in pairs:
            for a, ax in enumerate(AXES):
                t, e = float(p.truth[a]), float(p.estimate[a])
                w.writerow([p.object_id, ax, repr(t), repr(e), repr(abs(t - e))])
