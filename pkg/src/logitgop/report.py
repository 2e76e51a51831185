"""Analysis artifacts: per-phoneme error-rate comparison and per-class
score distribution summaries.

Everything here is emitted as data (CSV/JSON rows), never as rendered
images; plotting is left to whatever tool the numbers land in.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError
from .evalkit import ThresholdDecision
from .gop import METRICS

KDE_GRID_POINTS = 129

CLASS_CORRECT = "correct"
CLASS_MISPRONOUNCED = "mispronounced"


@dataclass(frozen=True)
class PhonemeRateRow:
    phoneme: str
    predicted_rate: float
    human_rate: float
    delta: float
    support: int

    def __post_init__(self):
        if not (0.0 <= self.predicted_rate <= 1.0 and 0.0 <= self.human_rate <= 1.0):
            raise ValueError("rates must lie in [0, 1]")
        if self.support < 1:
            raise ValueError("support must be at least 1")
        if self.delta != self.predicted_rate - self.human_rate:
            raise ValueError("delta must equal predicted_rate - human_rate")


@dataclass(frozen=True)
class DistributionSummary:
    metric_name: str
    class_name: str
    count: int
    mean: float
    std: float
    percentiles: dict[str, float]
    curve_x: tuple[float, ...]
    curve_density: tuple[float, ...]
    bandwidth: float


def silverman_bandwidth(values: np.ndarray) -> float:
    """Rule-of-thumb kernel width: 0.9 * min(std, IQR/1.34) * n^(-1/5)."""
    n = values.size
    std = float(values.std())
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25)
    spread_candidates = [c for c in (std, iqr / 1.34) if c > 0]
    if not spread_candidates:
        return 0.0
    return 0.9 * min(spread_candidates) * n ** (-0.2)


def _kde_curve(values: np.ndarray):
    """Gaussian KDE sampled on an even grid over the data range.

    The curve is renormalized so its trapezoid integral over the grid is
    exactly 1; a raw KDE leaks tail mass past [min, max]. Degenerate
    input (zero spread) yields a flat marker curve at the single value.
    """
    lo, hi = float(values.min()), float(values.max())
    grid = np.linspace(lo, hi, KDE_GRID_POINTS)
    h = silverman_bandwidth(values)
    if hi == lo or h == 0.0:
        return grid, np.ones(KDE_GRID_POINTS), 0.0
    z = (grid[:, None] - values[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (values.size * h * math.sqrt(2 * math.pi))
    area = np.trapezoid(density, grid)
    return grid, density / area, h


def distribution_summary(
    scored, labels, metric_name: str
) -> tuple[DistributionSummary, DistributionSummary]:
    """Per-class score summaries for one metric: (correct, mispronounced).

    labels runs parallel to scored; True marks a mispronounced phoneme.
    """
    if metric_name not in METRICS:
        raise EvaluationError(f"unknown metric {metric_name!r}")
    scored = list(scored)
    y = np.array([bool(l) for l in labels], dtype=bool)
    if len(scored) != y.size:
        raise EvaluationError("scored and labels must have equal length")
    if y.all() or not y.any():
        raise EvaluationError("distribution summary needs both classes present")
    values = np.array([s.value(metric_name) for s in scored])

    out = []
    for class_name, mask in (
        (CLASS_CORRECT, ~y),
        (CLASS_MISPRONOUNCED, y),
    ):
        v = values[mask]
        pcts = np.percentile(v, [5, 25, 50, 75, 95])
        grid, density, h = _kde_curve(v)
        out.append(
            DistributionSummary(
                metric_name=metric_name,
                class_name=class_name,
                count=int(v.size),
                mean=float(v.mean()),
                std=float(v.std()),
                percentiles={
                    "p5": float(pcts[0]),
                    "p25": float(pcts[1]),
                    "p50": float(pcts[2]),
                    "p75": float(pcts[3]),
                    "p95": float(pcts[4]),
                },
                curve_x=tuple(float(x) for x in grid),
                curve_density=tuple(float(d) for d in density),
                bandwidth=h,
            )
        )
    return out[0], out[1]


def phoneme_rate_table(
    scored, labels, decision: ThresholdDecision, symbols
) -> list[PhonemeRateRow]:
    """Per-phoneme flagged rate vs human-labeled rate, sorted by how much
    the model over-flags (delta descending; symbol breaks ties).

    Every row of scored must carry a label; symbols maps inventory index
    to phoneme symbol.
    """
    scored = list(scored)
    if any(l is None for l in labels):
        raise EvaluationError("phoneme rate table needs a label for every row")
    values = np.array([s.value(decision.metric_name) for s in scored])
    flagged = decision.flags(values)

    by_symbol: dict[str, list[tuple[bool, bool]]] = {}
    for s, flag, lab in zip(scored, flagged, labels):
        by_symbol.setdefault(symbols[s.phoneme], []).append((bool(flag), bool(lab)))

    rows = []
    for symbol, pairs in by_symbol.items():
        support = len(pairs)
        predicted = sum(1 for f, _ in pairs if f) / support
        human = sum(1 for _, l in pairs if l) / support
        rows.append(
            PhonemeRateRow(
                phoneme=symbol,
                predicted_rate=predicted,
                human_rate=human,
                delta=predicted - human,
                support=support,
            )
        )
    rows.sort(key=lambda r: (-r.delta, r.phoneme))
    return rows


def write_phoneme_rates_csv(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["phoneme", "predicted_rate", "human_rate", "delta", "support"])
    for r in rows:
        writer.writerow(
            [r.phoneme, repr(r.predicted_rate), repr(r.human_rate), repr(r.delta), r.support]
        )


def summary_to_jsonable(s: DistributionSummary) -> dict:
    return {
        "count": s.count,
        "mean": s.mean,
        "std": s.std,
        "percentiles": s.percentiles,
        "curve": {
            "x": list(s.curve_x),
            "density": list(s.curve_density),
            "bandwidth": s.bandwidth,
        },
    }


def distributions_to_jsonable(summaries: dict[str, tuple]) -> dict:
    """Bundle per-metric (correct, mispronounced) summary pairs for JSON."""
    return {
        "metadata": {
            "estimator": "gaussian",
            "bandwidth_rule": "silverman",
            "grid_points": KDE_GRID_POINTS,
            "normalized": True,
        },
        "metrics": {
            metric: {
                CLASS_CORRECT: summary_to_jsonable(pair[0]),
                CLASS_MISPRONOUNCED: summary_to_jsonable(pair[1]),
            }
            for metric, pair in summaries.items()
        },
    }


def dump_json(doc: dict) -> str:
    """Canonical JSON text: sorted keys, stable float repr, newline-terminated."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
