"""Compiled regression-tree kernels (variance reduction, NaN default branches)."""

import numba
import numpy as np

LEAF = -1


@numba.njit(cache=True)
def _best_split(X, y, rows, feat, default_left_out):
    """Best threshold on one feature for the given rows.

    Returns (gain, threshold); gain <= 0 means no valid split. NaN rows are
    sent to whichever side holds more non-NaN rows.
    """
    n = rows.shape[0]
    vals = np.empty(n)
    ys = np.empty(n)
    m = 0
    nan_sum = 0.0
    nan_sq = 0.0
    n_nan = 0
    for i in range(n):
        v = X[rows[i], feat]
        t = y[rows[i]]
        if np.isnan(v):
            nan_sum += t
            nan_sq += t * t
            n_nan += 1
        else:
            vals[m] = v
            ys[m] = t
            m += 1
    if m < 2:
        return -1.0, 0.0
    order = np.argsort(vals[:m], kind="mergesort")
    sv = vals[:m][order]
    sy = ys[:m][order]
    if sv[0] == sv[m - 1]:
        return -1.0, 0.0
    tot_sum = nan_sum
    tot_sq = nan_sq
    for i in range(m):
        tot_sum += sy[i]
        tot_sq += sy[i] * sy[i]
    n_all = m + n_nan
    parent = tot_sq - tot_sum * tot_sum / n_all
    best_gain = -1.0
    best_thr = 0.0
    best_left = True
    ls = 0.0
    lq = 0.0
    for i in range(m - 1):
        ls += sy[i]
        lq += sy[i] * sy[i]
        if sv[i] == sv[i + 1]:
            continue
        nl = i + 1
        nr = m - nl
        go_left = nl >= nr
        if go_left:
            a_n, a_s, a_q = nl + n_nan, ls + nan_sum, lq + nan_sq
        else:
            a_n, a_s, a_q = nl, ls, lq
        b_n = n_all - a_n
        b_s = tot_sum - a_s
        b_q = tot_sq - a_q
        child = (a_q - a_s * a_s / a_n) + (b_q - b_s * b_s / b_n)
        gain = parent - child
        if gain > best_gain + 1e-12:
            best_gain = gain
            thr = 0.5 * (sv[i] + sv[i + 1])
            if thr >= sv[i + 1]:
                thr = sv[i]
            best_thr = thr
            best_left = go_left
    default_left_out[0] = best_left
    return best_gain, best_thr


@numba.njit(cache=True)
def build_tree(X, y, sample, mtry, max_depth, min_leaf, seed):
    """Grow one tree on ``sample`` (row indices, repeats allowed).

    Node arrays: feature (-1 for leaves), threshold, left, right,
    default_left, value, gain (weighted variance decrease).
    """
    np.random.seed(seed)
    p = X.shape[1]
    cap = 2 * sample.shape[0] + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    default_left = np.ones(cap, dtype=np.bool_)
    value = np.zeros(cap)
    gain = np.zeros(cap)

    stack_rows = [sample]
    stack_node = [0]
    stack_depth = [0]
    n_nodes = 1
    flag = np.ones(1, dtype=np.bool_)
    while len(stack_node) > 0:
        rows = stack_rows.pop()
        node = stack_node.pop()
        depth = stack_depth.pop()
        n = rows.shape[0]
        s = 0.0
        for i in range(n):
            s += y[rows[i]]
        value[node] = s / n
        if n < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue
        same = True
        for i in range(1, n):
            if y[rows[i]] != y[rows[0]]:
                same = False
                break
        if same:
            continue
        perm = np.random.permutation(p)
        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        best_dl = True
        tried = 0
        for k in range(p):
            f = perm[k]
            g, thr = _best_split(X, y, rows, f, flag)
            if g < 0.0:
                continue
            tried += 1
            if g > best_gain + 1e-12:
                best_gain = g
                best_feat = f
                best_thr = thr
                best_dl = flag[0]
            if tried >= mtry:
                break
        if best_feat < 0:
            continue
        go = np.empty(n, dtype=np.bool_)
        n_left = 0
        for i in range(n):
            v = X[rows[i], best_feat]
            if np.isnan(v):
                go[i] = best_dl
            else:
                go[i] = v <= best_thr
            if go[i]:
                n_left += 1
        if n_left < min_leaf or n - n_left < min_leaf:
            continue
        lrows = np.empty(n_left, dtype=np.int64)
        rrows = np.empty(n - n_left, dtype=np.int64)
        a = 0
        b = 0
        for i in range(n):
            if go[i]:
                lrows[a] = rows[i]
                a += 1
            else:
                rrows[b] = rows[i]
                b += 1
        feature[node] = best_feat
        threshold[node] = best_thr
        default_left[node] = best_dl
        gain[node] = best_gain
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_rows.append(rrows)
        stack_node.append(n_nodes + 1)
        stack_depth.append(depth + 1)
        stack_rows.append(lrows)
        stack_node.append(n_nodes)
        stack_depth.append(depth + 1)
        n_nodes += 2
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            default_left[:n_nodes], value[:n_nodes], gain[:n_nodes])


@numba.njit(cache=True)
def predict_tree(X, feature, threshold, left, right, default_left, value):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while feature[node] != LEAF:
            v = X[i, feature[node]]
            if np.isnan(v):
                go_left = default_left[node]
            else:
                go_left = v <= threshold[node]
            node = left[node] if go_left else right[node]
        out[i] = value[node]
    return out
