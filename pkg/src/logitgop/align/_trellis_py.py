"""Pure numpy best-path search over the CTC state trellis.

Fallback kernel with the identical contract as the compiled _trellis
module; used when the extension is not built or is disabled via the
LOGITGOP_PURE environment variable.
"""

import numpy as np

NEG_INF = -np.inf


def best_path(logprobs, state_symbols, skip_ok):
    """Fill the trellis and backtrace the optimal state path.

    Args:
        logprobs: T x V float64 array of per-frame log-probabilities.
        state_symbols: int32 array of length S mapping trellis state to
            vocabulary index.
        skip_ok: uint8 array of length S; skip_ok[s] marks the s-2 -> s
            transition as legal.

    Returns (path, total): path[t] is the state occupied at frame t,
    total the optimal path log-probability. Tie order matches the
    compiled kernel: stay > advance-by-1 > advance-by-2; at termination
    the last label state beats the final blank.
    """
    T = logprobs.shape[0]
    S = state_symbols.shape[0]

    emit = logprobs[:, state_symbols]
    skip_mask = skip_ok.astype(bool)
    score = np.full(S, NEG_INF)
    score[0] = emit[0, 0]
    if S > 1:
        score[1] = emit[0, 1]

    bp = np.zeros((T, S), dtype=np.int8)
    cols = np.arange(S)
    for t in range(1, T):
        adv1 = np.concatenate(([NEG_INF], score[:-1]))
        adv2 = np.concatenate(([NEG_INF, NEG_INF], score[:-2]))
        adv2[~skip_mask] = NEG_INF
        cand = np.stack((score, adv1, adv2))
        arg = np.argmax(cand, axis=0)  # first max: stay preferred on ties
        score = cand[arg, cols] + emit[t]
        bp[t] = arg

    end = S - 1
    if S >= 2 and score[S - 2] >= score[S - 1]:
        end = S - 2
    total = float(score[end])

    path = np.empty(T, dtype=np.int64)
    path[T - 1] = end
    for t in range(T - 1, 0, -1):
        end -= bp[t, end]
        path[t - 1] = end
    return path, total
