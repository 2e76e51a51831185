"""Forced alignment against an exhaustive-enumeration oracle."""

import math
import subprocess
import sys

import numpy as np
import pytest

from logitgop import (
    AlignmentError,
    NonFiniteError,
    Posteriorgram,
    ctc_align,
    kernel_name,
    log_softmax,
    min_feasible_frames,
    slice_segment,
)
from logitgop.align import _trellis_py, log_softmax_frame
from logitgop.align.core import _expand_targets

from . import _oracles


def make_pgram(logits, utt_id="u"):
    return Posteriorgram(utt_id=utt_id, logits=logits, frame_stride_ms=10.0)


def random_case(rng):
    """One oracle-checkable instance: tiny trellis, feasible by construction."""
    v = int(rng.integers(2, 4))
    n_targets = int(rng.integers(1, 3))
    blank = int(rng.integers(0, v))
    pool = [k for k in range(v) if k != blank]
    targets = [pool[int(rng.integers(len(pool)))] for _ in range(n_targets)]
    t_min = min_feasible_frames(targets)
    t = int(rng.integers(t_min, 7))
    logits = rng.normal(0.0, 2.0, size=(t, v))
    return logits, targets, blank


def run_oracle_batch(n_cases, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        logits, targets, blank = random_case(rng)
        p = make_pgram(logits)
        a = ctc_align(p, targets, blank)
        logprobs = log_softmax(logits)
        total, path = _oracles.brute_best_path(logprobs, targets, blank)
        assert math.isfinite(a.total_path_logprob)
        assert abs(a.total_path_logprob - total) <= 1e-9
        spans = _oracles.spans_from_path(path, targets)
        got = [(s.t1, s.t2) for s in a.segments]
        assert got == spans, (logits.shape, targets, blank)


def test_matches_enumeration_oracle():
    run_oracle_batch(300, seed=1234)


def test_log_softmax_fixtures():
    assert np.allclose(log_softmax_frame([0.0, 0.0]), [-math.log(2)] * 2)
    assert np.allclose(log_softmax_frame([1000.0] * 3), [-math.log(3)] * 3)
    out = log_softmax_frame([3.0, 1.0])
    assert abs(out[0] - (-0.12692801104297263)) < 1e-9
    assert abs(out[1] - (-2.1269280110429727)) < 1e-9
    assert abs(np.exp(out).sum() - 1.0) < 1e-9


def test_log_softmax_shift_invariance():
    rng = np.random.default_rng(0)
    for _ in range(50):
        row = rng.normal(0, 5, size=8)
        c = rng.normal(0, 100)
        assert np.max(np.abs(log_softmax_frame(row) - log_softmax_frame(row + c))) <= 1e-9


def test_log_softmax_rejects_bad_input():
    with pytest.raises(NonFiniteError):
        log_softmax_frame([0.0, float("nan")])
    with pytest.raises(ValueError):
        log_softmax_frame([[0.0, 1.0]])


def test_expand_targets_topology():
    symbols, skip_ok = _expand_targets([2, 2, 1], blank=0)
    assert symbols.tolist() == [0, 2, 0, 2, 0, 1, 0]
    # skip allowed only into a label state whose label differs from its
    # predecessor label; the repeated 2 forbids it
    assert skip_ok.tolist() == [0, 0, 0, 0, 0, 1, 0]


def test_min_feasible_frames():
    assert min_feasible_frames([1]) == 1
    assert min_feasible_frames([1, 2]) == 2
    assert min_feasible_frames([1, 1]) == 3
    assert min_feasible_frames([1, 1, 2, 2]) == 6


def test_tightest_feasible_repeat():
    # 3 frames is exactly enough for [p, p]: label, mandatory blank, label
    logits = np.zeros((3, 3))
    a = ctc_align(make_pgram(logits), [1, 1], blank=0)
    assert [(s.t1, s.t2) for s in a.segments] == [(0, 0), (2, 2)]


def test_all_tied_scores_match_oracle_tiebreak():
    # every path has the same total; span choice must still be deterministic
    # and equal to the documented stay-over-advance tie-break
    for t, targets in ((4, [1]), (5, [1, 2]), (6, [2, 1])):
        logits = np.zeros((t, 3))
        p = make_pgram(logits)
        a = ctc_align(p, targets, blank=0)
        b = ctc_align(p, targets, blank=0)
        assert a == b
        logprobs = log_softmax(logits)
        total, path = _oracles.brute_best_path(logprobs, targets, blank=0)
        assert [(s.t1, s.t2) for s in a.segments] == _oracles.spans_from_path(
            path, targets
        )
        assert abs(a.total_path_logprob - total) <= 1e-9


def test_segment_structure_on_larger_inputs():
    rng = np.random.default_rng(99)
    for _ in range(60):
        v = int(rng.integers(3, 9))
        blank = 0
        n = int(rng.integers(1, 7))
        targets = [int(rng.integers(1, v)) for _ in range(n)]
        t = int(rng.integers(min_feasible_frames(targets), 41))
        logits = rng.normal(0, 2, size=(t, v))
        a = ctc_align(make_pgram(logits), targets, blank)
        assert [s.phoneme for s in a.segments] == targets
        assert [s.position for s in a.segments] == list(range(n))
        prev_end = -1
        for s in a.segments:
            assert prev_end < s.t1 <= s.t2 < t
            prev_end = s.t2
        # span_score is the mean label log-probability over the span
        logprobs = log_softmax(logits)
        for s in a.segments:
            expect = logprobs[s.t1 : s.t2 + 1, s.phoneme].mean()
            assert abs(s.span_score - expect) <= 1e-12


def test_planted_corridor_recovered():
    rng = np.random.default_rng(5)
    t, v = 14, 6
    logits = rng.normal(-2, 0.05, size=(t, v))
    logits[0:3, 0] = 5.0
    logits[3:7, 2] = 5.0
    logits[7:9, 0] = 5.0
    logits[9:12, 4] = 5.0
    logits[12:, 0] = 5.0
    a = ctc_align(make_pgram(logits), [2, 4], blank=0)
    assert [(s.t1, s.t2) for s in a.segments] == [(3, 6), (9, 11)]


def test_validation_errors():
    p = make_pgram(np.zeros((4, 3)))
    with pytest.raises(AlignmentError, match="empty"):
        ctc_align(p, [], blank=0)
    with pytest.raises(AlignmentError, match="blank"):
        ctc_align(p, [0, 1], blank=0)
    with pytest.raises(AlignmentError, match="out of range"):
        ctc_align(p, [7], blank=0)
    with pytest.raises(AlignmentError, match="blank index"):
        ctc_align(p, [1], blank=9)
    with pytest.raises(AlignmentError, match="infeasible"):
        ctc_align(make_pgram(np.zeros((2, 3))), [1, 1], blank=0)


def test_slice_segment_row():
    logits = np.arange(15, dtype=float).reshape(5, 3)
    p = make_pgram(logits)
    a = ctc_align(p, [1], blank=0)
    seg = a.segments[0]
    rows = slice_segment(p, seg)
    assert rows.shape == (seg.t2 - seg.t1 + 1, 3)
    # a [2, 2] span yields exactly row 2
    from logitgop import AlignedSegment

    one = AlignedSegment(position=0, phoneme=1, t1=2, t2=2, span_score=0.0)
    rows = slice_segment(p, one)
    assert rows.shape == (1, 3)
    assert np.array_equal(rows[0], logits[2])
    with pytest.raises(ValueError):
        rows[0, 0] = 1.0
    bad = AlignedSegment(position=0, phoneme=1, t1=4, t2=5, span_score=0.0)
    with pytest.raises(AlignmentError):
        slice_segment(p, bad)


def test_pure_kernel_agrees_with_compiled():
    if kernel_name() != "compiled":
        pytest.skip("compiled kernel unavailable; nothing to compare")
    rng = np.random.default_rng(77)
    from logitgop.align import _trellis

    for _ in range(200):
        v = int(rng.integers(2, 8))
        blank = 0
        n = int(rng.integers(1, 6))
        targets = [int(rng.integers(1, v)) for _ in range(n)] if v > 1 else [1]
        t = int(rng.integers(min_feasible_frames(targets), 30))
        logprobs = np.ascontiguousarray(
            log_softmax(rng.normal(0, 2, size=(t, v)))
        )
        symbols, skip_ok = _expand_targets(targets, blank)
        path_c, total_c = _trellis.best_path(logprobs, symbols, skip_ok)
        path_p, total_p = _trellis_py.best_path(logprobs, symbols, skip_ok)
        assert np.array_equal(np.asarray(path_c), np.asarray(path_p))
        assert abs(total_c - total_p) <= 1e-12


def test_pure_fallback_env_var():
    code = (
        "from logitgop import kernel_name; print(kernel_name())"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "LOGITGOP_PURE": "1"},
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "pure"


def test_alignment_deterministic():
    rng = np.random.default_rng(11)
    logits = rng.normal(0, 1, size=(25, 5))
    p = make_pgram(logits)
    a = ctc_align(p, [1, 3, 2], blank=0)
    b = ctc_align(p, [1, 3, 2], blank=0)
    assert a == b
