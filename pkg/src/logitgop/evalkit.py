"""Evaluation protocol: MCC-optimal thresholds, confusion metrics, ROC AUC,
quadratic regression against human ratings, Pearson correlation with
Fisher-z confidence bounds, and MSE.

Thresholds are swept over integer percentiles of the pooled score
distribution (default 1..99) and the percentile maximizing MCC wins,
ties broken toward the lower percentile. The positive class is always
"mispronounced"; per-metric orientation decides which side of the
threshold is flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import EvaluationError
from .gop import HIGHER_IS_BETTER, HIGHER_IS_WORSE, METRICS, ORIENTATION

# 97.5% normal quantile for the two-sided 95% Fisher-z interval
_Z95 = float(stats.norm.ppf(0.975))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")
        if self.tp + self.fp + self.fn + self.tn < 1:
            raise ValueError("confusion counts must total at least 1")


@dataclass(frozen=True)
class ThresholdDecision:
    metric_name: str
    threshold: float
    percentile: float
    orientation: str

    def __post_init__(self):
        if self.metric_name not in METRICS:
            raise ValueError(f"unknown metric {self.metric_name!r}")
        if self.orientation != ORIENTATION[self.metric_name]:
            raise ValueError(
                f"orientation {self.orientation!r} contradicts the polarity "
                f"table for {self.metric_name!r}"
            )

    def flags(self, scores) -> np.ndarray:
        """Boolean predictions: True where a score is classified mispronounced."""
        s = np.asarray(scores, dtype=np.float64)
        if self.orientation == HIGHER_IS_WORSE:
            return s > self.threshold
        return s < self.threshold


@dataclass(frozen=True)
class RegressionModel:
    """Quadratic map from a GOP value to a predicted human score."""

    c0: float
    c1: float
    c2: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.c0, self.c1, self.c2)):
            raise ValueError("regression coefficients must be finite")

    def predict(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=np.float64)
        return self.c0 + self.c1 * g + self.c2 * g * g


def confusion_metrics(c: ConfusionCounts) -> dict[str, float]:
    """Accuracy, precision, recall, F1 and MCC with degenerate fallbacks.

    Undefined precision/recall/F1 fall back to 0; MCC falls back to 0
    when any confusion-matrix marginal is zero.
    """
    tp, fp, fn, tn = c.tp, c.fp, c.fn, c.tn
    total = tp + fp + fn + tn
    accuracy = (tp + tn) / total
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(denom) if denom > 0 else 0.0
    return {
        "accuracy": accuracy,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "mcc": mcc,
    }


def _counts(flags: np.ndarray, labels: np.ndarray) -> ConfusionCounts:
    tp = int(np.sum(flags & labels))
    fp = int(np.sum(flags & ~labels))
    fn = int(np.sum(~flags & labels))
    tn = int(np.sum(~flags & ~labels))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _check_two_classes(labels: np.ndarray, context: str):
    if labels.all() or not labels.any():
        raise EvaluationError(f"{context}: labels contain a single class")


def sweep_threshold(
    scores,
    labels,
    orientation: str,
    metric_name: str = "dnn",
    percentiles=range(1, 100),
) -> tuple[ThresholdDecision, ConfusionCounts]:
    """Pick the percentile threshold that maximizes MCC.

    Thresholds sit at integer percentiles of the pooled empirical score
    distribution. higher-is-worse flags score > threshold, higher-is-better
    flags score < threshold. Ties go to the lower percentile.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise EvaluationError("scores and labels must be 1-D and equal length")
    if s.size < 2:
        raise EvaluationError("need at least two scored phonemes to sweep")
    _check_two_classes(y, "threshold sweep")

    grid = list(percentiles)
    if not grid:
        raise EvaluationError("empty percentile grid")
    thresholds = np.percentile(s, grid)

    best = None
    for q, theta in zip(grid, thresholds):
        flags = s > theta if orientation == HIGHER_IS_WORSE else s < theta
        counts = _counts(flags, y)
        mcc = confusion_metrics(counts)["mcc"]
        if best is None or mcc > best[0]:
            best = (mcc, q, float(theta), counts)
    _, q, theta, counts = best
    decision = ThresholdDecision(
        metric_name=metric_name,
        threshold=theta,
        percentile=float(q),
        orientation=orientation,
    )
    return decision, counts


def roc_auc(scores, labels, orientation: str) -> float:
    """Probability a random mispronounced phoneme outranks a correct one.

    Rank statistic (Mann-Whitney); ties count one half. Scores are
    orientation-normalized first so "outranks" always means "looks worse".
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise EvaluationError("scores and labels must be 1-D and equal length")
    _check_two_classes(y, "roc_auc")
    if orientation == HIGHER_IS_BETTER:
        s = -s
    ranks = stats.rankdata(s)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def fit_poly2(gop, human) -> RegressionModel:
    """Least-squares quadratic fit of human scores to GOP values."""
    g = np.asarray(gop, dtype=np.float64)
    h = np.asarray(human, dtype=np.float64)
    if g.shape != h.shape or g.ndim != 1:
        raise EvaluationError("gop and human lists must be 1-D and equal length")
    if np.unique(g).size < 3:
        raise EvaluationError(
            "quadratic fit needs at least 3 distinct GOP values"
        )
    design = np.column_stack((np.ones_like(g), g, g * g))
    coef, *_ = np.linalg.lstsq(design, h, rcond=None)
    return RegressionModel(c0=float(coef[0]), c1=float(coef[1]), c2=float(coef[2]))


def pcc_with_ci(predicted, actual) -> dict[str, float]:
    """Pearson correlation with 95% Fisher-z bounds, plus MSE.

    A correlation of exactly +/-1 has no Fisher transform; the interval
    collapses onto the point estimate in that case.
    """
    p = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape or p.ndim != 1:
        raise EvaluationError("predicted and actual must be 1-D and equal length")
    n = p.size
    if n < 4:
        raise EvaluationError("need at least 4 points for a Fisher-z interval")
    if p.std() == 0 or a.std() == 0:
        raise EvaluationError("zero-variance input: correlation undefined")
    pc = p - p.mean()
    ac = a - a.mean()
    # identical (or negated) inputs must yield exactly +/-1, not 1 - ulp,
    # so that the |r| = 1 interval collapse below actually triggers
    if np.array_equal(pc, ac):
        r = 1.0
    elif np.array_equal(pc, -ac):
        r = -1.0
    else:
        r = float(np.corrcoef(p, a)[0, 1])
    r = max(-1.0, min(1.0, r))
    mse = float(np.mean((p - a) ** 2))
    if abs(r) >= 1.0:
        low = high = r
    else:
        z = math.atanh(r)
        half = _Z95 / math.sqrt(n - 3)
        low = math.tanh(z - half)
        high = math.tanh(z + half)
    return {"pcc_point": r, "pcc_low": low, "pcc_high": high, "mse": mse}


@dataclass(frozen=True)
class MetricReport:
    """One metric's full evaluation row set; sections absent when the
    corpus lacks the data to compute them."""

    metric_name: str
    decision: ThresholdDecision | None = None
    counts: ConfusionCounts | None = None
    classification: dict[str, float] | None = None
    auc_mcc_max: float | None = None
    regression: RegressionModel | None = None
    correlation: dict[str, float] | None = None


@dataclass(frozen=True)
class EvalReport:
    metrics: dict[str, MetricReport]
    config: dict
    warnings: tuple[str, ...] = ()


def effective_labels(labels, human_scores, human_threshold: float):
    """Merge explicit labels with binarized human scores.

    Per row: an explicit label wins; otherwise a human score below the
    threshold marks a mispronunciation; otherwise the row has no label.
    """
    out = []
    for lab, hum in zip(labels, human_scores):
        if lab is not None:
            out.append(bool(lab))
        elif hum is not None:
            out.append(bool(hum < human_threshold))
        else:
            out.append(None)
    return out


def evaluate_scores(
    scored,
    split_of: dict[str, str] | None = None,
    human_threshold: float = 2.0,
    percentiles=range(1, 100),
    config_echo: dict | None = None,
) -> EvalReport:
    """Run the full protocol over a list of ScoredPhoneme.

    Classification (threshold sweep, confusion metrics, AUC) uses every
    row with a label, explicit or binarized from its human score.
    Regression is fit on the train split's human-scored rows and its
    correlation/MSE reported on the test split; it needs a split map
    (utt_id -> train|test) to do that.
    """
    scored = list(scored)
    if not scored:
        raise EvaluationError("no scored phonemes to evaluate")
    warnings: list[str] = []

    labels = effective_labels(
        [s.label for s in scored], [s.human_score for s in scored], human_threshold
    )
    labeled_idx = [i for i, lab in enumerate(labels) if lab is not None]
    do_classify = len(labeled_idx) >= 2
    if not do_classify:
        warnings.append("no labels available: classification skipped")
    y = np.array([labels[i] for i in labeled_idx], dtype=bool)
    if do_classify and (y.all() or not y.any()):
        raise EvaluationError("labels contain a single class; sweep undefined")

    human_idx = [i for i, s in enumerate(scored) if s.human_score is not None]
    do_regress = bool(human_idx)
    if do_regress and split_of is None:
        warnings.append("no split information: regression skipped")
        do_regress = False
    if do_regress:
        train_idx = [i for i in human_idx if split_of.get(scored[i].utt_id) == "train"]
        test_idx = [i for i in human_idx if split_of.get(scored[i].utt_id) == "test"]
        if len(train_idx) < 3 or len(test_idx) < 4:
            warnings.append(
                "train/test splits too small for regression: skipped"
            )
            do_regress = False

    reports = {}
    for metric in METRICS:
        orientation = ORIENTATION[metric]
        decision = counts = classification = auc = None
        if do_classify:
            s = np.array([scored[i].value(metric) for i in labeled_idx])
            decision, counts = sweep_threshold(
                s, y, orientation, metric_name=metric, percentiles=percentiles
            )
            classification = confusion_metrics(counts)
            auc = roc_auc(s, y, orientation)
        regression = correlation = None
        if do_regress:
            g_train = [scored[i].value(metric) for i in train_idx]
            h_train = [scored[i].human_score for i in train_idx]
            g_test = np.array([scored[i].value(metric) for i in test_idx])
            h_test = np.array([scored[i].human_score for i in test_idx])
            regression = fit_poly2(g_train, h_train)
            correlation = pcc_with_ci(regression.predict(g_test), h_test)
        reports[metric] = MetricReport(
            metric_name=metric,
            decision=decision,
            counts=counts,
            classification=classification,
            auc_mcc_max=auc,
            regression=regression,
            correlation=correlation,
        )
    return EvalReport(
        metrics=reports,
        config=dict(config_echo or {}),
        warnings=tuple(warnings),
    )


def report_to_jsonable(report: EvalReport) -> dict:
    """EvalReport as a JSON-ready dict; row names match the table schema."""
    metrics = {}
    for name, m in report.metrics.items():
        row: dict = {}
        if m.decision is not None:
            row["threshold"] = m.decision.threshold
            row["percentile"] = m.decision.percentile
            row["orientation"] = m.decision.orientation
            row["confusion"] = {
                "tp": m.counts.tp,
                "fp": m.counts.fp,
                "fn": m.counts.fn,
                "tn": m.counts.tn,
            }
            row.update(
                {
                    "accuracy": m.classification["accuracy"],
                    "precision": m.classification["precision"],
                    "recall": m.classification["recall"],
                    "f1": m.classification["f1"],
                    "mcc": m.classification["mcc"],
                    "auc_mcc_max": m.auc_mcc_max,
                }
            )
        if m.regression is not None:
            row["regression"] = {
                "c0": m.regression.c0,
                "c1": m.regression.c1,
                "c2": m.regression.c2,
                "pcc_point": m.correlation["pcc_point"],
            }
            row["pcc_low_conf"] = m.correlation["pcc_low"]
            row["pcc_high_conf"] = m.correlation["pcc_high"]
            row["mse"] = m.correlation["mse"]
        metrics[name] = row
    return {
        "metrics": metrics,
        "config": report.config,
        "warnings": list(report.warnings),
    }
