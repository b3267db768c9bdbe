# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled best-split search for one tree level.

Must stay operation-for-operation identical to ``_splitter_py`` so both
backends grow bit-identical trees.
"""

import numpy as np

from libc.stdint cimport int64_t


def level_best_splits(
    const double[:, ::1] XT,
    const int64_t[:, ::1] order,
    const int64_t[::1] node_of,
    const double[::1] t,
    const double[::1] w,
    Py_ssize_t n_nodes,
    const unsigned char[:, ::1] feat_mask,
    double min_leaf,
    double min_gain,
):
    cdef Py_ssize_t d = XT.shape[0]
    cdef Py_ssize_t n = XT.shape[1]
    cdef Py_ssize_t f, p, i, k
    cdef double x, wl_k, wr_k, sl_k, sr_k, gain, thr

    best_feature = np.full(n_nodes, -1, dtype=np.int64)
    best_threshold = np.zeros(n_nodes, dtype=np.float64)
    best_gain = np.full(n_nodes, min_gain, dtype=np.float64)
    S_arr = np.zeros(n_nodes, dtype=np.float64)
    W_arr = np.zeros(n_nodes, dtype=np.float64)
    base_arr = np.zeros(n_nodes, dtype=np.float64)
    sl_arr = np.zeros(n_nodes, dtype=np.float64)
    wl_arr = np.zeros(n_nodes, dtype=np.float64)
    last_arr = np.zeros(n_nodes, dtype=np.float64)
    seen_arr = np.zeros(n_nodes, dtype=np.uint8)

    cdef int64_t[::1] bf = best_feature
    cdef double[::1] bt = best_threshold
    cdef double[::1] bg = best_gain
    cdef double[::1] S = S_arr
    cdef double[::1] W = W_arr
    cdef double[::1] base = base_arr
    cdef double[::1] sl = sl_arr
    cdef double[::1] wl = wl_arr
    cdef double[::1] last = last_arr
    cdef unsigned char[::1] seen = seen_arr

    for i in range(n):
        k = node_of[i]
        if k >= 0:
            S[k] += t[i] * w[i]
            W[k] += w[i]
    for k in range(n_nodes):
        if W[k] > 0:
            base[k] = S[k] * S[k] / W[k]

    for f in range(d):
        for k in range(n_nodes):
            sl[k] = 0.0
            wl[k] = 0.0
            seen[k] = 0
        for p in range(n):
            i = order[f, p]
            k = node_of[i]
            if k < 0 or not feat_mask[k, f]:
                continue
            x = XT[f, i]
            if seen[k] and x > last[k]:
                wl_k = wl[k]
                wr_k = W[k] - wl_k
                if wl_k >= min_leaf and wr_k >= min_leaf:
                    sl_k = sl[k]
                    sr_k = S[k] - sl_k
                    gain = sl_k * sl_k / wl_k + sr_k * sr_k / wr_k - base[k]
                    if gain > bg[k]:
                        bg[k] = gain
                        bf[k] = f
                        thr = (last[k] + x) * 0.5
                        if thr >= x:
                            thr = last[k]
                        bt[k] = thr
            sl[k] += t[i] * w[i]
            wl[k] += w[i]
            last[k] = x
            seen[k] = 1

    return best_feature, best_threshold, best_gain
