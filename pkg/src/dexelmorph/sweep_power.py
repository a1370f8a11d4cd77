"""Per-seed-radius 2D dilation of parallel segments (the second stage).

A weighted segment ``(x, z_in, z_out; radius)`` dilates to a capsule, split
into an axis-aligned box (the segment extruded ``radius`` along x) and two
endpoint disks.  Boxes need no diagram at all: per depth only the seed that
reaches furthest along the sweep matters.  Endpoint disks are swept with a
half-space power diagram of points, weight ``radius**2``.

On a fixed row ``x`` the power distance of point ``i`` is
``z**2 + g_i(z)`` with ``g_i(z) = -2 z_i z + c_i(x)`` and
``c_i(x) = z_i**2 + (x - x_i)**2 - radius_i**2``.  Cells along the row are
the lower envelope of these lines, so they appear in depth order.  A middle
point ``b`` between ``a`` and ``c`` owns nothing on the row iff
``P(x) = c_b - lam c_a - (1 - lam) c_c >= 0`` with
``lam = (z_c - z_b) / (z_c - z_a)``.  The quadratic terms cancel, so ``P`` is
linear in ``x``: the middle point is gone for good exactly when ``P`` has
positive slope, from the root of ``P`` onwards (its power vertex).  With a
non-positive slope its cell keeps (or regains) a piece of the sweep line, so
no removal is scheduled.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from . import _ivl
from .dexel import Interval, normalize_column
from .errors import InvalidInputError
from .sweep_voronoi import ROW_SLACK, WeightedSegment, _vertex3, reach_rows


class WeightedPoint(NamedTuple):
    x: float
    z: float
    radius: float


def power_distance(p, q: WeightedPoint) -> float:
    return (p[0] - q.x) ** 2 + (p[1] - q.z) ** 2 - q.radius ** 2


def power_vertex(p1: WeightedPoint, p2: WeightedPoint, p3: WeightedPoint):
    """Point of equal power distance to three weighted points, or ``None``."""
    p1, p2, p3 = (WeightedPoint(*map(float, p)) for p in (p1, p2, p3))
    ok, x, z = _vertex3(p1.x, p1.z, p2.x, p2.z, p3.x, p3.z,
                        p1.radius ** 2, p2.radius ** 2, p3.radius ** 2)
    return (x, z) if ok else None


@njit(cache=True, nogil=True)
def _removal_x(xa, za, wa, xb, zb, wb, xc, zc, wc):
    """Sweep position from which b is dominated by a and c for good.

    Returns ``-inf`` when b is dominated at every position, NaN when it is
    never permanently dominated.  Requires ``za <= zb <= zc``, ``za < zc``;
    coordinates are taken relative to b.
    """
    if not zc > za:
        return np.nan
    lam = (zc - zb) / (zc - za)
    ua = xa - xb
    uc = xc - xb
    va = za - zb
    vc = zc - zb
    A = 2.0 * (lam * ua + (1.0 - lam) * uc)
    B = -wb - lam * (ua * ua + va * va - wa) - (1.0 - lam) * (uc * uc + vc * vc - wc)
    # identical x (or coincident points) give an exact zero slope
    if A > 0.0:
        return xb - B / A
    if A == 0.0 and B >= 0.0:
        return -np.inf
    return np.nan


def power_vertex_is_removal(left: WeightedPoint, middle: WeightedPoint, right: WeightedPoint,
                            vertex=None) -> bool:
    """Whether the middle point's power cell leaves the sweep line for good.

    The sweep runs towards +x.  Points must be in depth order
    ``left.z <= middle.z <= right.z`` with ``left.z < right.z``.  ``vertex``
    (their power vertex, if any) marks where the change happens; the
    decision itself only depends on which side of it the middle point is
    dominated.
    """
    a, b, c = (WeightedPoint(*map(float, p)) for p in (left, middle, right))
    if not (a.z <= b.z <= c.z and a.z < c.z):
        raise InvalidInputError("points must be given in depth order")
    xr = _removal_x(a.x, a.z, a.radius ** 2, b.x, b.z, b.radius ** 2, c.x, c.z, c.radius ** 2)
    return not math.isnan(xr)


# compiled sweeps ---------------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _point_event(Pz, Px, Pw, a, m, c, s):
    """Removal step of point ``m`` between neighbours ``a`` and ``c``, or -1 for never."""
    xr = _removal_x(Px[a] * s, Pz[a], Pw[a], Px[m] * s, Pz[m], Pw[m], Px[c] * s, Pz[c], Pw[c])
    if np.isnan(xr) or xr == np.inf:
        return -1
    v = math.ceil(xr / s - ROW_SLACK)
    if v < 0.0:
        return 0
    if v > 4e18:
        return -1
    return int(v)


@njit(cache=True, nogil=True, inline="always")
def _push_event(head, tail, Esid, Eleft, Eright, Enext, ne, row, sid, left, right):
    """Append an event to step ``row``'s list; events past the last step are dropped."""
    if row >= head.shape[0] - 1:
        return ne
    Esid[ne] = sid
    Eleft[ne] = left
    Eright[ne] = right
    Enext[ne] = -1
    if tail[row] >= 0:
        Enext[tail[row]] = ne
    else:
        head[row] = ne
    tail[row] = ne
    return ne + 1


@njit(cache=True, nogil=True)
def _power_half_sweep(ptr, lo, hi, w, s, eps, reverse, boxes_only=False, bare_lo=-np.inf, bare_hi=np.inf):
    """One direction of the capsule sweep; rows are visited backwards if ``reverse``.

    ``boxes_only`` skips the endpoint disks; so do endpoints equal to
    ``bare_lo`` or ``bare_hi`` (pieces running off a window).  Returns per-row normalized output as CSR ``(ptr, lo, hi)`` indexed by the
    original row order, plus the largest active point count.
    """
    nrows = ptr.shape[0] - 1
    # boxes: keyed by the last row they reach
    Blo = np.empty(16)
    Bhi = np.empty(16)
    Bk = np.empty(16)
    nb = 0
    Tlo = np.empty(16)
    Thi = np.empty(16)
    Tk = np.empty(16)
    Slo = np.empty(16)
    Shi = np.empty(16)
    Sk = np.empty(16)
    # points
    Pz = np.empty(16)
    Px = np.empty(16, np.int64)
    Pw = np.empty(16)
    Pid = np.empty(16, np.int64)
    npnt = 0
    ndead = 0  # removed entries still in the P arrays
    alive = np.zeros(16, np.int64)
    idz = np.empty(16)
    nid = 0
    # events keyed by integer step: a FIFO list per step (Enext chains)
    head = np.full(nrows + 1, -1, np.int64)
    tail = np.full(nrows + 1, -1, np.int64)
    # each point gets one expiry event, three on insertion and two per neighbour removal
    cap = 12 * lo.shape[0] + 16
    Esid = np.empty(cap, np.int64)
    Eleft = np.empty(cap, np.int64)
    Eright = np.empty(cap, np.int64)
    Enext = np.empty(cap, np.int64)
    ne = 0
    Nz = np.empty(16)
    Nx = np.empty(16, np.int64)
    Nw = np.empty(16)
    Nid = np.empty(16, np.int64)
    Npos = np.empty(16, np.int64)  # merged positions of this row's points
    Qz = np.empty(16)
    Qw = np.empty(16)
    raw_lo = np.empty(16)
    raw_hi = np.empty(16)
    row_lo = np.empty(nrows + 1, np.int64)
    row_hi = np.empty(nrows + 1, np.int64)
    out_lo = np.empty(64)
    out_hi = np.empty(64)
    m = 0
    max_active = 0
    for step in range(nrows):
        row = nrows - 1 - step if reverse else step
        k0 = ptr[row]
        k1 = ptr[row + 1]
        nnew = k1 - k0
        # boxes: envelope of the active list and this row's seeds, then expire
        if nnew > 0:
            Slo = _ivl.grow_f(Slo, nnew)
            Shi = _ivl.grow_f(Shi, nnew)
            Sk = _ivl.grow_f(Sk, nnew)
            for t in range(nnew):
                Slo[t] = lo[k0 + t]
                Shi[t] = hi[k0 + t]
                Sk[t] = step + reach_rows(w[k0 + t], s)
            Tlo, Thi, Tk, nt = _ivl.envelope_into(Blo, Bhi, Bk, 0, nb, Slo, Shi, Sk, 0, nnew,
                                                  Tlo, Thi, Tk, 0)
            Blo, Tlo = Tlo, Blo
            Bhi, Thi = Thi, Bhi
            Bk, Tk = Tk, Bk
            nb = nt
        q = 0
        for t in range(nb):
            if Bk[t] >= step:
                Blo[q] = Blo[t]
                Bhi[q] = Bhi[t]
                Bk[q] = Bk[t]
                q += 1
        nb = q
        # points: the row's endpoints, deduplicated keeping the larger weight
        nq = 0
        Qz = _ivl.grow_f(Qz, 2 * nnew)
        Qw = _ivl.grow_f(Qw, 2 * nnew)
        for t in range(k0, k1):
            for e in range(2):
                z = lo[t] if e == 0 else hi[t]
                if z == bare_lo or z == bare_hi:
                    continue
                if nq > 0 and Qz[nq - 1] == z:
                    if w[t] > Qw[nq - 1]:
                        Qw[nq - 1] = w[t]
                else:
                    Qz[nq] = z
                    Qw[nq] = w[t]
                    nq += 1
        if nq > 0 and not boxes_only:
            total = npnt + nq
            Nz = _ivl.grow_f(Nz, total)
            Nx = _ivl.grow_i(Nx, total)
            Nw = _ivl.grow_f(Nw, total)
            Nid = _ivl.grow_i(Nid, total)
            Npos = _ivl.grow_i(Npos, nq)
            alive = _ivl.grow_i(alive, nid + nq)
            idz = _ivl.grow_f(idz, nid + nq)
            a = 0
            b = 0
            t = 0
            while a < npnt or b < nq:
                if a < npnt and Pid[a] < 0:
                    a += 1
                    continue
                if b >= nq or (a < npnt and Pz[a] <= Qz[b]):
                    Nz[t] = Pz[a]
                    Nx[t] = Px[a]
                    Nw[t] = Pw[a]
                    Nid[t] = Pid[a]
                    a += 1
                else:
                    Nz[t] = Qz[b]
                    Nx[t] = step
                    Nw[t] = Qw[b]
                    Nid[t] = nid
                    Npos[b] = t
                    alive[nid] = 1
                    idz[nid] = Qz[b]
                    ne = _push_event(head, tail, Esid, Eleft, Eright, Enext, ne,
                                     step + reach_rows(Qw[b], s) + 1, nid, -1, -1)
                    nid += 1
                    b += 1
                t += 1
            Pz, Nz = Nz, Pz
            Px, Nx = Nx, Px
            Pw, Nw = Nw, Pw
            Pid, Nid = Nid, Pid
            npnt = t
            ndead = 0
            last = -2
            for u in range(nq):
                p = Npos[u]
                for mm in range(max(p - 1, last + 1), min(p + 2, npnt)):
                    if 1 <= mm <= npnt - 2:
                        ev = _point_event(Pz, Px, Pw, mm - 1, mm, mm + 1, s)
                        if ev >= 0:
                            ne = _push_event(head, tail, Esid, Eleft, Eright, Enext, ne,
                                             max(ev, step), Pid[mm], Pid[mm - 1], Pid[mm + 1])
                    last = mm
        prev = -1
        while True:
            e = head[step] if prev < 0 else Enext[prev]
            if e < 0:
                break
            prev = e
            sid = Esid[e]
            left = Eleft[e]
            right = Eright[e]
            if alive[sid] == 0:
                continue
            p = np.searchsorted(Pz[:npnt], idz[sid])
            while p < npnt and Pid[p] != sid:
                p += 1
            if p >= npnt:
                continue
            # removed points stay in place (id -1) until the next merge
            L = p - 1
            while L >= 0 and Pid[L] < 0:
                L -= 1
            R = p + 1
            while R < npnt and Pid[R] < 0:
                R += 1
            if left >= 0:
                if L < 0 or R >= npnt or Pid[L] != left or Pid[R] != right:
                    continue
            alive[sid] = 0
            Pid[p] = -1
            ndead += 1
            if L < 0 or R >= npnt:
                continue
            LL = L - 1
            while LL >= 0 and Pid[LL] < 0:
                LL -= 1
            RR = R + 1
            while RR < npnt and Pid[RR] < 0:
                RR += 1
            if LL >= 0:
                ev = _point_event(Pz, Px, Pw, LL, L, R, s)
                if ev >= 0:
                    ne = _push_event(head, tail, Esid, Eleft, Eright, Enext, ne,
                                     max(ev, step), Pid[L], Pid[LL], Pid[R])
            if RR < npnt:
                ev = _point_event(Pz, Px, Pw, L, R, RR, s)
                if ev >= 0:
                    ne = _push_event(head, tail, Esid, Eleft, Eright, Enext, ne,
                                     max(ev, step), Pid[R], Pid[L], Pid[RR])
        if npnt - ndead > max_active:
            max_active = npnt - ndead
        # emit boxes and chords, interleaved by position so the union is linear
        raw_lo = _ivl.grow_f(raw_lo, nb + npnt)
        raw_hi = _ivl.grow_f(raw_hi, nb + npnt)
        n = 0
        t = 0
        p = 0
        while t < nb or p < npnt:
            if p >= npnt or (t < nb and Blo[t] <= Pz[p]):
                raw_lo[n] = Blo[t]
                raw_hi[n] = Bhi[t]
                n += 1
                t += 1
            elif Pid[p] < 0:
                p += 1
            else:
                d = (step - Px[p]) * s
                h2 = Pw[p] - d * d
                if h2 > 0.0:
                    h = math.sqrt(h2)
                    raw_lo[n] = Pz[p] - h
                    raw_hi[n] = Pz[p] + h
                    n += 1
                p += 1
        row_lo[row] = m
        out_lo, out_hi, m = _ivl.union_sorted_into(raw_lo, raw_hi, n, eps, out_lo, out_hi, m)
        row_hi[row] = m
    # reorder rows into CSR
    optr = np.zeros(nrows + 1, np.int64)
    for row in range(nrows):
        optr[row + 1] = optr[row] + row_hi[row] - row_lo[row]
    olo = np.empty(optr[nrows])
    ohi = np.empty(optr[nrows])
    for row in range(nrows):
        a = row_lo[row]
        for t in range(row_hi[row] - a):
            olo[optr[row] + t] = out_lo[a + t]
            ohi[optr[row] + t] = out_hi[a + t]
    return optr, olo, ohi, max_active


@njit(cache=True, nogil=True)
def _power_dilate_csr(ptr, lo, hi, w, s, eps, boxes_only=False, bare_lo=-np.inf, bare_hi=np.inf):
    """Both sweep directions unioned row by row."""
    fptr, flo, fhi, _ = _power_half_sweep(ptr, lo, hi, w, s, eps, False, boxes_only, bare_lo, bare_hi)
    bptr, blo, bhi, _ = _power_half_sweep(ptr, lo, hi, w, s, eps, True, boxes_only, bare_lo, bare_hi)
    nrows = ptr.shape[0] - 1
    optr = np.zeros(nrows + 1, np.int64)
    out_lo = np.empty(flo.shape[0] + blo.shape[0] + 1)
    out_hi = np.empty(flo.shape[0] + blo.shape[0] + 1)
    m = 0
    for row in range(nrows):
        out_lo, out_hi, m = _ivl.boolean_into(flo[fptr[row]:fptr[row + 1]], fhi[fptr[row]:fptr[row + 1]],
                                              blo[bptr[row]:bptr[row + 1]], bhi[bptr[row]:bptr[row + 1]],
                                              _ivl.UNION, eps, out_lo, out_hi, m)
        optr[row + 1] = m
    return optr, out_lo[:m].copy(), out_hi[:m].copy()


# Python entry points ----------------------------------------------------------


def _weighted_rows_to_csr(rows, spacing):
    """Pack rows of weighted segments; overlapping pieces keep the larger radius."""
    ptr = np.zeros(len(rows) + 1, np.int64)
    lo, hi, w = [], [], []
    for k, row in enumerate(rows):
        segs = sorted((WeightedSegment(*seg) for seg in row), key=lambda q: q.z_in)
        plo = np.empty(0)
        phi = np.empty(0)
        pw = np.empty(0)
        for q in segs:
            if not (math.isfinite(q.radius) and q.radius >= 0):
                raise InvalidInputError(f"radius must be finite and >= 0, got {q.radius}")
            if not q.z_in <= q.z_out:
                raise InvalidInputError(f"segment needs z_in <= z_out, got {q}")
            if q.z_in == q.z_out:
                continue
            plo, phi, pw = _ivl.envelope_arrays(plo, phi, pw, np.array([q.z_in]), np.array([q.z_out]),
                                                np.array([q.radius ** 2]))
        lo.extend(plo.tolist())
        hi.extend(phi.tolist())
        w.extend(pw.tolist())
        ptr[k + 1] = ptr[k] + plo.size
    return ptr, np.array(lo, np.float64), np.array(hi, np.float64), np.array(w, np.float64)


def _csr_to_rows(ptr, lo, hi):
    return [[Interval(a, b) for a, b in zip(lo[ptr[k]:ptr[k + 1]].tolist(), hi[ptr[k]:ptr[k + 1]].tolist())]
            for k in range(ptr.size - 1)]


def power_dilate_2d(rows, spacing=1.0, eps_merge=0.0):
    """Union of the capsules of all weighted segments, restricted to the rows.

    ``rows[k]`` holds the ``WeightedSegment``s sitting on row ``k``; their
    ``x`` field is ignored in favour of the row index ``k``.
    """
    ptr, lo, hi, w = _weighted_rows_to_csr(rows, spacing)
    optr, olo, ohi = _power_dilate_csr(ptr, lo, hi, w, float(spacing), float(eps_merge))
    return _csr_to_rows(optr, olo, ohi)


def box_dilate(rows, spacing=1.0, eps_merge=0.0):
    """Extrusion part only: each segment appears unchanged on rows within its radius."""
    ptr, lo, hi, w = _weighted_rows_to_csr(rows, spacing)
    optr, olo, ohi = _power_dilate_csr(ptr, lo, hi, w, float(spacing), float(eps_merge), True)
    return _csr_to_rows(optr, olo, ohi)


def point_power_half_sweep(rows, direction="forward", spacing=1.0, eps_merge=0.0):
    """Disk chords of the weighted points swept in one direction.

    ``rows[k]`` holds ``WeightedPoint``s on row ``k``.  Each row of the result
    is the union of chords ``[z - h, z + h]``, ``h = sqrt(radius**2 - d**2)``,
    over points on the sweep's trailing side.
    """
    if direction not in ("forward", "backward"):
        raise InvalidInputError(f"direction must be 'forward' or 'backward', got {direction!r}")
    # each point becomes a zero-length segment: its box adds nothing
    ptr = np.zeros(len(rows) + 1, np.int64)
    zs, ws = [], []
    for k, row in enumerate(rows):
        pts = {}
        for p in row:
            p = WeightedPoint(*map(float, p))
            if not (math.isfinite(p.radius) and p.radius >= 0):
                raise InvalidInputError(f"radius must be finite and >= 0, got {p.radius}")
            pts[p.z] = max(pts.get(p.z, 0.0), p.radius ** 2)
        for z in sorted(pts):
            zs.append(z)
            ws.append(pts[z])
        ptr[k + 1] = ptr[k] + len(pts)
    z = np.array(zs, np.float64)
    w = np.array(ws, np.float64)
    optr, olo, ohi, _ = _power_half_sweep(ptr, z, z, w, float(spacing), float(eps_merge),
                                          direction == "backward")
    return _csr_to_rows(optr, olo, ohi)
