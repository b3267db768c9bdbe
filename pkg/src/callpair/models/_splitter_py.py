"""Pure-numpy best-split search, the fallback for the compiled ``_splitter``.

Sums are accumulated in the same order as the compiled loop (``np.cumsum``
and ``np.bincount`` are sequential), so both backends pick identical splits.
"""

from __future__ import annotations

import numpy as np


def level_best_splits(XT, order, node_of, t, w, n_nodes, feat_mask, min_leaf, min_gain):
    d, n = XT.shape
    best_feature = np.full(n_nodes, -1, dtype=np.int64)
    best_threshold = np.zeros(n_nodes, dtype=np.float64)
    best_gain = np.full(n_nodes, min_gain, dtype=np.float64)

    active = node_of >= 0
    idx = np.flatnonzero(active)
    tw = t * w
    S = np.bincount(node_of[idx], weights=tw[idx], minlength=n_nodes)
    W = np.bincount(node_of[idx], weights=w[idx], minlength=n_nodes)
    base = np.zeros(n_nodes)
    nz = W > 0
    base[nz] = S[nz] * S[nz] / W[nz]

    for f in range(d):
        use = feat_mask[:, f].astype(bool)
        if not use.any():
            continue
        o = order[f]
        nd = node_of[o]
        keep = nd >= 0
        keep[keep] = use[nd[keep]]
        o = o[keep]
        nd = nd[keep]
        if o.size == 0:
            continue
        g = np.argsort(nd, kind="stable")
        o = o[g]
        nd = nd[g]
        starts = np.flatnonzero(np.r_[True, nd[1:] != nd[:-1]])
        ends = np.r_[starts[1:], nd.size]
        x_all = XT[f, o]
        tw_all = tw[o]
        w_all = w[o]
        for a, b in zip(starts.tolist(), ends.tolist()):
            if b - a < 2:
                continue
            k = int(nd[a])
            x = x_all[a:b]
            cs = np.cumsum(tw_all[a:b])[:-1]
            cw = np.cumsum(w_all[a:b])[:-1]
            cand = x[1:] > x[:-1]
            wr = W[k] - cw
            cand &= (cw >= min_leaf) & (wr >= min_leaf)
            if not cand.any():
                continue
            j = np.flatnonzero(cand)
            sl = cs[j]
            wl = cw[j]
            sr = S[k] - sl
            gain = sl * sl / wl + sr * sr / wr[j] - base[k]
            m = int(np.argmax(gain))
            if gain[m] > best_gain[k]:
                best_gain[k] = gain[m]
                best_feature[k] = f
                lo = x[j[m]]
                hi = x[j[m] + 1]
                thr = (lo + hi) * 0.5
                if thr >= hi:
                    thr = lo
                best_threshold[k] = thr
    return best_feature, best_threshold, best_gain
