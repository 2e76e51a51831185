"""Goodness-of-pronunciation scores over aligned phoneme segments.

Five scores per segment, all computed from the S x V block of raw logits
the aligner assigned to the target phoneme:

    dnn        negative log of the mean softmax posterior of the target
    max_logit  peak raw logit of the target across the span
    margin     mean per-frame gap between the target logit and its
               strongest competitor
    var_logit  population variance of the target's raw logit
    combined   alpha * margin - (1 - alpha) * dnn

Orientation differs by score; ORIENTATION records which direction means
"worse pronunciation" so downstream thresholding never has to guess.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .align import log_softmax, slice_segment
from .errors import ScoringError

METRICS = ("dnn", "max_logit", "margin", "var_logit", "combined")

HIGHER_IS_WORSE = "higher-is-worse"
HIGHER_IS_BETTER = "higher-is-better"

# Direction of badness per metric. dnn is a negative log-probability and
# var_logit measures instability, so both grow as pronunciation degrades;
# the logit-derived confidence scores shrink instead.
ORIENTATION = {
    "dnn": HIGHER_IS_WORSE,
    "max_logit": HIGHER_IS_BETTER,
    "margin": HIGHER_IS_BETTER,
    "var_logit": HIGHER_IS_WORSE,
    "combined": HIGHER_IS_BETTER,
}


@dataclass(frozen=True)
class GopConfig:
    """Knobs shared by the scoring functions.

    exclude_blank_from_competitors defaults to True: CTC models emit
    dominant blank logits on most frames, which would drag every margin
    negative and drown phoneme-vs-phoneme confusion, the quantity the
    margin is after. Set it False for the literal all-competitors reading.

    exclude_blank_from_softmax defaults to False: the posterior score is
    taken over the full model output; renormalizing without blank is a
    sensitivity study, not the default.
    """

    alpha: float = 0.5
    exclude_blank_from_competitors: bool = True
    exclude_blank_from_softmax: bool = False
    log_epsilon: float = 1e-12

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.log_epsilon > 0:
            raise ValueError("log_epsilon must be positive")


@dataclass(frozen=True)
class ScoredPhoneme:
    """All five scores for one aligned phoneme occurrence."""

    utt_id: str
    position: int
    phoneme: int
    t1: int
    t2: int
    gop_dnn: float
    gop_max_logit: float
    gop_margin: float
    gop_var_logit: float
    gop_combined: float
    label: bool | None = None
    human_score: float | None = None

    def __post_init__(self):
        values = (
            self.gop_dnn,
            self.gop_max_logit,
            self.gop_margin,
            self.gop_var_logit,
            self.gop_combined,
        )
        if not all(math.isfinite(v) for v in values):
            raise ScoringError(
                f"utterance '{self.utt_id}' position {self.position}: "
                f"non-finite score"
            )
        if self.gop_dnn < 0 or self.gop_var_logit < 0:
            raise ScoringError(
                f"utterance '{self.utt_id}' position {self.position}: "
                f"negative dnn/var score"
            )

    def value(self, metric: str) -> float:
        return {
            "dnn": self.gop_dnn,
            "max_logit": self.gop_max_logit,
            "margin": self.gop_margin,
            "var_logit": self.gop_var_logit,
            "combined": self.gop_combined,
        }[metric]


def _check_segment(segment_logits) -> np.ndarray:
    arr = np.asarray(segment_logits, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ScoringError(f"segment must be a non-empty S x V matrix, got {arr.shape}")
    return arr


def _check_target(arr: np.ndarray, p: int):
    if not 0 <= p < arr.shape[1]:
        raise ScoringError(f"target index {p} out of range for V={arr.shape[1]}")


def gop_dnn(segment_logits, p: int, cfg: GopConfig, blank: int | None = None) -> float:
    """Negative log of the target's mean softmax posterior over the span.

    With cfg.exclude_blank_from_softmax the posterior is renormalized
    over the non-blank vocabulary (blank must then be given and p must
    differ from it). The mean posterior is floored at cfg.log_epsilon so
    the result stays finite.
    """
    arr = _check_segment(segment_logits)
    _check_target(arr, p)
    if cfg.exclude_blank_from_softmax:
        if blank is None:
            raise ScoringError("exclude_blank_from_softmax needs the blank index")
        if p == blank:
            raise ScoringError("target equals blank but blank is excluded")
        arr = np.delete(arr, blank, axis=1)
        if p > blank:
            p -= 1
    probs = np.exp(log_softmax(arr))
    mean_post = float(probs[:, p].mean())
    return -math.log(max(mean_post, cfg.log_epsilon))


def gop_max_logit(segment_logits, p: int) -> float:
    """Peak raw logit of the target phoneme across the span."""
    arr = _check_segment(segment_logits)
    _check_target(arr, p)
    return float(arr[:, p].max())


def gop_margin(segment_logits, p: int, cfg: GopConfig, blank: int | None = None) -> float:
    """Mean per-frame lead of the target logit over the best competitor."""
    arr = _check_segment(segment_logits)
    _check_target(arr, p)
    mask = np.ones(arr.shape[1], dtype=bool)
    mask[p] = False
    if cfg.exclude_blank_from_competitors and blank is not None and blank != p:
        mask[blank] = False
    if not mask.any():
        raise ScoringError("competitor set is empty")
    competitors = arr[:, mask].max(axis=1)
    return float((arr[:, p] - competitors).mean())


def gop_var_logit(segment_logits, p: int) -> float:
    """Population variance (divisor S) of the target's raw logit."""
    arr = _check_segment(segment_logits)
    _check_target(arr, p)
    col = arr[:, p]
    return float(np.mean((col - col.mean()) ** 2))


def gop_combined(margin: float, dnn: float, cfg: GopConfig) -> float:
    """Mix margin and posterior scores: alpha*margin - (1-alpha)*dnn."""
    if not (math.isfinite(margin) and math.isfinite(dnn)):
        raise ScoringError("combined score needs finite inputs")
    return cfg.alpha * margin - (1.0 - cfg.alpha) * dnn


def score_segment(
    segment_logits, p: int, cfg: GopConfig, blank: int | None = None
) -> dict[str, float]:
    """All five scores for one segment, keyed by metric name."""
    dnn = gop_dnn(segment_logits, p, cfg, blank)
    margin = gop_margin(segment_logits, p, cfg, blank)
    return {
        "dnn": dnn,
        "max_logit": gop_max_logit(segment_logits, p),
        "margin": margin,
        "var_logit": gop_var_logit(segment_logits, p),
        "combined": gop_combined(margin, dnn, cfg),
    }


def score_utterance(
    pgram,
    alignment,
    cfg: GopConfig,
    blank: int | None = None,
    labels=None,
    human_scores=None,
) -> list[ScoredPhoneme]:
    """Score every aligned segment of one utterance.

    labels / human_scores, when given, run parallel to the canonical
    phoneme sequence and are attached to the matching positions.
    """
    if pgram.utt_id != alignment.utt_id:
        raise ScoringError(
            f"alignment for '{alignment.utt_id}' does not belong to "
            f"posteriorgram '{pgram.utt_id}'"
        )
    out = []
    for seg in alignment.segments:
        rows = slice_segment(pgram, seg)
        scores = score_segment(rows, seg.phoneme, cfg, blank)
        out.append(
            ScoredPhoneme(
                utt_id=pgram.utt_id,
                position=seg.position,
                phoneme=seg.phoneme,
                t1=seg.t1,
                t2=seg.t2,
                gop_dnn=scores["dnn"],
                gop_max_logit=scores["max_logit"],
                gop_margin=scores["margin"],
                gop_var_logit=scores["var_logit"],
                gop_combined=scores["combined"],
                label=None if labels is None else bool(labels[seg.position]),
                human_score=(
                    None if human_scores is None else float(human_scores[seg.position])
                ),
            )
        )
    return out


def recombine(margins, dnns, cfg: GopConfig, z_normalize: bool = False):
    """Recompute combined scores over a whole evaluation set.

    The two ingredients live on different natural scales; z_normalize
    standardizes each over the set before mixing. Off by default: the
    plain definition subtracts them raw.
    """
    m = np.asarray(margins, dtype=np.float64)
    d = np.asarray(dnns, dtype=np.float64)
    if m.shape != d.shape:
        raise ScoringError("margin and dnn lists must have equal length")
    if z_normalize:
        m = (m - m.mean()) / (m.std() or 1.0)
        d = (d - d.mean()) / (d.std() or 1.0)
    return cfg.alpha * m - (1.0 - cfg.alpha) * d
