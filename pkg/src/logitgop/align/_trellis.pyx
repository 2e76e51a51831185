# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled best-path search over the CTC state trellis.

Same contract as _trellis_py.best_path; this version is the hot kernel
used for corpus-scale alignment.
"""

import numpy as np


def best_path(double[:, ::1] logprobs, int[::1] state_symbols,
              unsigned char[::1] skip_ok):
    """Fill the trellis and backtrace the optimal state path.

    Returns (path, total) where path[t] is the trellis state occupied at
    frame t and total is the optimal path log-probability. Ties prefer
    staying in the current state over advancing, and the last label state
    over the final blank at termination.
    """
    cdef Py_ssize_t T = logprobs.shape[0]
    cdef Py_ssize_t S = state_symbols.shape[0]

    path_arr = np.empty(T, dtype=np.int64)
    bp_arr = np.zeros((T, S), dtype=np.int8)
    prev_arr = np.full(S, -np.inf, dtype=np.float64)
    cur_arr = np.full(S, -np.inf, dtype=np.float64)

    cdef long long[::1] path = path_arr
    cdef signed char[:, ::1] bp = bp_arr
    cdef double[::1] prev = prev_arr
    cdef double[::1] cur = cur_arr

    cdef Py_ssize_t t, s, end
    cdef double best, cand, total
    cdef signed char arg

    prev[0] = logprobs[0, state_symbols[0]]
    if S > 1:
        prev[1] = logprobs[0, state_symbols[1]]

    for t in range(1, T):
        for s in range(S):
            best = prev[s]
            arg = 0
            if s >= 1:
                cand = prev[s - 1]
                if cand > best:
                    best = cand
                    arg = 1
            if s >= 2 and skip_ok[s]:
                cand = prev[s - 2]
                if cand > best:
                    best = cand
                    arg = 2
            cur[s] = best + logprobs[t, state_symbols[s]]
            bp[t, s] = arg
        prev, cur = cur, prev

    end = S - 1
    if S >= 2 and prev[S - 2] >= prev[S - 1]:
        end = S - 2
    total = prev[end]

    path[T - 1] = end
    for t in range(T - 1, 0, -1):
        end = end - bp[t, end]
        path[t - 1] = end
    return path_arr, total
