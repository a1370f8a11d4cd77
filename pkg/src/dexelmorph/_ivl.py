"""Compiled interval kernels: normalization, booleans and max-key envelopes.

Everything here works on parallel float64 arrays of lower/upper bounds so the
sweep kernels can call it without leaving nopython mode.
"""

import numpy as np
from numba import njit

UNION = 0
INTERSECTION = 1
DIFFERENCE = 2


@njit(cache=True, nogil=True)
def grow_f(a, n):
    if n <= a.shape[0]:
        return a
    b = np.empty(max(n, 2 * a.shape[0] + 8), np.float64)
    b[: a.shape[0]] = a
    return b


@njit(cache=True, nogil=True)
def grow_i(a, n):
    if n <= a.shape[0]:
        return a
    b = np.empty(max(n, 2 * a.shape[0] + 8), np.int64)
    b[: a.shape[0]] = a
    return b


@njit(cache=True, nogil=True)
def normalize_into(lo, hi, n, eps, out_lo, out_hi, m):
    """Sort/merge the first ``n`` raw intervals and append them at ``out[m:]``.

    Degenerate intervals (``hi <= lo``) are discarded first, then gaps
    ``<= eps`` close, then merged intervals of length ``<= eps`` are dropped.
    Returns the (possibly reallocated) output arrays and the new fill count.
    """
    k = 0
    keep = np.empty(n, np.int64)
    for t in range(n):
        if hi[t] > lo[t]:
            keep[k] = t
            k += 1
    if k == 0:
        return out_lo, out_hi, m
    keys = np.empty(k, np.float64)
    for t in range(k):
        keys[t] = lo[keep[t]]
    order = np.argsort(keys)
    out_lo = grow_f(out_lo, m + k)
    out_hi = grow_f(out_hi, m + k)
    cur_lo = lo[keep[order[0]]]
    cur_hi = hi[keep[order[0]]]
    for t in range(1, k):
        q = keep[order[t]]
        if lo[q] - cur_hi <= eps:
            if hi[q] > cur_hi:
                cur_hi = hi[q]
        else:
            if cur_hi - cur_lo > eps:
                out_lo[m] = cur_lo
                out_hi[m] = cur_hi
                m += 1
            cur_lo = lo[q]
            cur_hi = hi[q]
    if cur_hi - cur_lo > eps:
        out_lo[m] = cur_lo
        out_hi[m] = cur_hi
        m += 1
    return out_lo, out_hi, m


@njit(cache=True, nogil=True)
def normalize_arrays(lo, hi, eps):
    out_lo = np.empty(lo.shape[0], np.float64)
    out_hi = np.empty(lo.shape[0], np.float64)
    out_lo, out_hi, m = normalize_into(lo, hi, lo.shape[0], eps, out_lo, out_hi, 0)
    return out_lo[:m].copy(), out_hi[:m].copy()


@njit(cache=True, nogil=True)
def boolean_into(alo, ahi, blo, bhi, op, eps, out_lo, out_hi, m):
    """Boolean of two normalized columns, appended to ``out`` and normalized."""
    na = alo.shape[0]
    nb = blo.shape[0]
    raw_lo = np.empty(na + nb + 1, np.float64)
    raw_hi = np.empty(na + nb + 1, np.float64)
    k = 0
    ia = 0
    ib = 0
    in_a = False
    in_b = False
    inside = False
    start = 0.0
    # walk all endpoints in order; a point is inside a column on [lo, hi]
    while ia < 2 * na or ib < 2 * nb:
        za = np.inf
        zb = np.inf
        if ia < 2 * na:
            za = alo[ia // 2] if ia % 2 == 0 else ahi[ia // 2]
        if ib < 2 * nb:
            zb = blo[ib // 2] if ib % 2 == 0 else bhi[ib // 2]
        z = min(za, zb)
        if za == z:
            in_a = ia % 2 == 0
            ia += 1
        if zb == z:
            in_b = ib % 2 == 0
            ib += 1
        if op == UNION:
            now = in_a or in_b
        elif op == INTERSECTION:
            now = in_a and in_b
        else:
            now = in_a and not in_b
        if now and not inside:
            start = z
            inside = True
        elif inside and not now:
            raw_lo[k] = start
            raw_hi[k] = z
            k += 1
            inside = False
    return normalize_into(raw_lo, raw_hi, k, eps, out_lo, out_hi, m)


@njit(cache=True, nogil=True)
def boolean_arrays(alo, ahi, blo, bhi, op, eps):
    out_lo = np.empty(alo.shape[0] + blo.shape[0] + 1, np.float64)
    out_hi = np.empty(alo.shape[0] + blo.shape[0] + 1, np.float64)
    out_lo, out_hi, m = boolean_into(alo, ahi, blo, bhi, op, eps, out_lo, out_hi, 0)
    return out_lo[:m].copy(), out_hi[:m].copy()


@njit(cache=True, nogil=True)
def envelope_into(alo, ahi, akey, a0, a1, blo, bhi, bkey, b0, b1, out_lo, out_hi, out_key, m):
    """Upper envelope of two sorted disjoint keyed piece lists.

    Every point covered by either list keeps the larger key; touching output
    pieces that carry an identical key are fused.  Inputs are the slices
    ``a[a0:a1]`` and ``b[b0:b1]``; output is appended at ``out[m:]``.
    """
    cap = m + 2 * ((a1 - a0) + (b1 - b0)) + 1
    out_lo = grow_f(out_lo, cap)
    out_hi = grow_f(out_hi, cap)
    out_key = grow_f(out_key, cap)
    first = m
    ia = a0
    ib = b0
    z = -np.inf
    while ia < a1 or ib < b1:
        # skip pieces fully behind z
        while ia < a1 and ahi[ia] <= z:
            ia += 1
        while ib < b1 and bhi[ib] <= z:
            ib += 1
        if ia >= a1 and ib >= b1:
            break
        la = max(alo[ia], z) if ia < a1 else np.inf
        lb = max(blo[ib], z) if ib < b1 else np.inf
        start = min(la, lb)
        a_on = ia < a1 and la <= start
        b_on = ib < b1 and lb <= start
        if a_on and b_on:
            end = min(ahi[ia], bhi[ib])
            if akey[ia] >= bkey[ib]:
                key = akey[ia]
            else:
                key = bkey[ib]
        elif a_on:
            end = ahi[ia]
            if ib < b1 and lb < end:
                end = lb
            key = akey[ia]
        else:
            end = bhi[ib]
            if ia < a1 and la < end:
                end = la
            key = bkey[ib]
        if end > start:
            if m > first and out_hi[m - 1] == start and out_key[m - 1] == key:
                out_hi[m - 1] = end
            else:
                out_lo[m] = start
                out_hi[m] = end
                out_key[m] = key
                m += 1
        z = end
    return out_lo, out_hi, out_key, m


@njit(cache=True, nogil=True)
def envelope_arrays(alo, ahi, akey, blo, bhi, bkey):
    out_lo = np.empty(0, np.float64)
    out_hi = np.empty(0, np.float64)
    out_key = np.empty(0, np.float64)
    out_lo, out_hi, out_key, m = envelope_into(
        alo, ahi, akey, 0, alo.shape[0], blo, bhi, bkey, 0, blo.shape[0], out_lo, out_hi, out_key, 0
    )
    return out_lo[:m].copy(), out_hi[:m].copy(), out_key[:m].copy()


@njit(cache=True, nogil=True)
def union_sorted_into(lo, hi, n, eps, out_lo, out_hi, m):
    """Like ``normalize_into`` for intervals listed in order of some inner point.

    If each interval contains a point ``p_t`` with ``p_0 <= p_1 <= ...``, the
    newest block always reaches ``p_{t-1}``, so an incoming interval can only
    overlap blocks at the top of the stack: linear time, no sort.
    """
    out_lo = grow_f(out_lo, m + n)
    out_hi = grow_f(out_hi, m + n)
    top = m
    for t in range(n):
        a = lo[t]
        b = hi[t]
        if not b > a:
            continue
        while top > m and a - out_hi[top - 1] <= eps:
            top -= 1
            if out_lo[top] < a:
                a = out_lo[top]
            if out_hi[top] > b:
                b = out_hi[top]
        out_lo[top] = a
        out_hi[top] = b
        top += 1
    k = m
    for t in range(m, top):
        if out_hi[t] - out_lo[t] > eps:
            out_lo[k] = out_lo[t]
            out_hi[k] = out_hi[t]
            k += 1
    return out_lo, out_hi, k
