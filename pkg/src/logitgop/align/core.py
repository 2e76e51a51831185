"""CTC forced alignment: phoneme frame spans from a posteriorgram.

The target sequence is expanded into the standard CTC state topology
(blank, p1, blank, p2, ..., blank) and the single best monotonic
assignment of frames to states is found by dynamic programming. Frames
the optimum assigns to blank states belong to no phoneme; each target's
[t1, t2] span covers exactly the frames spent in its own label state,
which the monotone topology guarantees to be one contiguous, non-empty
run per target.

Alignment runs on log-softmax probabilities, not raw logits: the
acoustic model was trained under softmax normalization, and path scores
must be comparable across frames. Raw logits stay untouched for scoring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AlignmentError, NonFiniteError
from ..tensorio import Posteriorgram

from . import _kernel


def kernel_name() -> str:
    """Which trellis kernel is active: 'compiled' or 'pure'."""
    return _kernel.NAME


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax with max-subtraction for numerical stability."""
    arr = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise NonFiniteError("log_softmax input contains NaN/Inf")
    shifted = arr - arr.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    return shifted - lse


def log_softmax_frame(logits_row) -> np.ndarray:
    """Log-softmax of a single frame's logit vector."""
    row = np.asarray(logits_row, dtype=np.float64)
    if row.ndim != 1:
        raise ValueError(f"expected a 1-D logit row, got shape {row.shape}")
    return log_softmax(row)


@dataclass(frozen=True)
class AlignedSegment:
    """One phoneme occurrence: inclusive frame span plus its mean log-prob."""

    position: int
    phoneme: int
    t1: int
    t2: int
    span_score: float


@dataclass(frozen=True)
class Alignment:
    utt_id: str
    segments: tuple[AlignedSegment, ...]
    total_path_logprob: float


def _expand_targets(targets, blank: int):
    """CTC state sequence (blank-interleaved) and legal-skip flags."""
    n_states = 2 * len(targets) + 1
    symbols = np.empty(n_states, dtype=np.int32)
    skip_ok = np.zeros(n_states, dtype=np.uint8)
    symbols[0::2] = blank
    for i, p in enumerate(targets):
        s = 2 * i + 1
        symbols[s] = p
        if i > 0 and targets[i] != targets[i - 1]:
            skip_ok[s] = 1
    return symbols, skip_ok


def min_feasible_frames(targets) -> int:
    """Fewest frames a valid CTC path through the targets can take."""
    repeats = sum(1 for a, b in zip(targets, targets[1:]) if a == b)
    return len(targets) + repeats


def ctc_align(p: Posteriorgram, targets, blank: int) -> Alignment:
    """Best-path CTC forced alignment of a target phoneme sequence.

    Returns one segment per target with its inclusive frame span, the
    mean log-probability of the label over that span, and the optimal
    path's total log-probability. Deterministic: ties in the trellis
    prefer staying in the current state over advancing.
    """
    targets = [int(x) for x in targets]
    if len(targets) == 0:
        raise AlignmentError(f"utterance '{p.utt_id}': empty target sequence")
    v = p.vocab_size
    if not 0 <= blank < v:
        raise AlignmentError(f"utterance '{p.utt_id}': blank index {blank} out of range")
    for x in targets:
        if not 0 <= x < v:
            raise AlignmentError(
                f"utterance '{p.utt_id}': target index {x} out of range for V={v}"
            )
        if x == blank:
            raise AlignmentError(f"utterance '{p.utt_id}': targets contain blank")
    t_frames = p.num_frames
    needed = min_feasible_frames(targets)
    if t_frames < needed:
        raise AlignmentError(
            f"utterance '{p.utt_id}': {t_frames} frames infeasible for "
            f"{len(targets)} targets (needs at least {needed})"
        )

    logprobs = np.ascontiguousarray(log_softmax(p.logits))
    symbols, skip_ok = _expand_targets(targets, blank)
    path, total = _kernel.best_path(logprobs, symbols, skip_ok)

    segments = []
    for i, phoneme in enumerate(targets):
        frames = np.flatnonzero(path == 2 * i + 1)
        t1 = int(frames[0])
        t2 = int(frames[-1])
        span = float(logprobs[t1 : t2 + 1, phoneme].mean())
        segments.append(
            AlignedSegment(position=i, phoneme=phoneme, t1=t1, t2=t2, span_score=span)
        )
    return Alignment(
        utt_id=p.utt_id, segments=tuple(segments), total_path_logprob=float(total)
    )


def slice_segment(p: Posteriorgram, s: AlignedSegment) -> np.ndarray:
    """Rows t1..t2 (inclusive) of the posteriorgram, as a read-only view."""
    if not (0 <= s.t1 <= s.t2 < p.num_frames):
        raise AlignmentError(
            f"utterance '{p.utt_id}': segment [{s.t1}, {s.t2}] outside "
            f"0..{p.num_frames - 1}"
        )
    return p.logits[s.t1 : s.t2 + 1]
