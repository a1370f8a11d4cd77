"""Half-space Voronoi sweep over parallel seed segments in one 2D slice.

A slice is a sequence of rows at integer positions ``y = 0, 1, ...``; each row
holds disjoint seed segments ``[z_in, z_out]`` parallel to the z axis.  A
forward sweep visits rows in increasing ``y`` and keeps an ordered set of
*active* seeds: every seed seen so far that may still be the nearest seed for
some point on the current row, within distance ``r``.  Newer seeds occlude
older ones on overlapping depth ranges, seeds are retired ``r`` rows after
insertion, and a middle seed is retired early once the Voronoi vertex it
forms with its two neighbours has been passed.  The full 2D dilation of a
slice is the row-wise union of a forward and a backward sweep.

Rows are ``spacing`` apart in world units; row coordinates are row
indices, depths and radii are world units.

Two implementations share the vertex algebra below: ``SweepState`` is the
readable incremental structure, ``_sweep_kernel`` the compiled engine the 3D
pipeline runs.
"""

from __future__ import annotations

import bisect
import heapq
import itertools
import math
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

from . import _ivl
from .dexel import Interval, normalize_column
from .errors import InvalidInputError

EPS_DET = 1e-12
# a vertex this close below an integer row still counts as reached at that row
ROW_SLACK = 1e-9


class SeedSegment(NamedTuple):
    y: float
    z_in: float
    z_out: float


class WeightedSegment(NamedTuple):
    x: float
    z_in: float
    z_out: float
    radius: float


# vertex algebra ---------------------------------------------------------------


@njit(cache=True, nogil=True)
def _vertex3(y1, z1, y2, z2, y3, z3, w1, w2, w3):
    """Common point of the bisectors (p1, p2) and (p2, p3) under power weights.

    With all weights zero this is the plain Voronoi vertex.  Works in a frame
    centred on p1 to keep the right-hand side well conditioned.
    """
    u2 = y2 - y1
    v2 = z2 - z1
    u3 = y3 - y1
    v3 = z3 - z1
    a11 = 2.0 * u2
    a12 = 2.0 * v2
    a21 = 2.0 * (u3 - u2)
    a22 = 2.0 * (v3 - v2)
    b1 = (u2 * u2 + v2 * v2 - w2) - (0.0 - w1)
    b2 = (u3 * u3 + v3 * v3 - w3) - (u2 * u2 + v2 * v2 - w2)
    det = a11 * a22 - a12 * a21
    scale = max(a11 * a11 + a12 * a12, a21 * a21 + a22 * a22)
    if scale == 0.0 or abs(det) <= EPS_DET * scale:
        return False, np.nan, np.nan
    y = (b1 * a22 - a12 * b2) / det
    z = (a11 * b2 - a21 * b1) / det
    return True, y + y1, z + z1


@njit(cache=True, nogil=True)
def _vertex_segment_roots(y1, z1, ys, y2, z2):
    """Points equidistant from p1, p2 and the line ``y = ys``.

    Eliminating ``y`` between the parabola (line vs p1) and the straight
    bisector (p1 vs p2) leaves a quadratic in ``z``.  Returns the number of
    real roots and up to two ``(y, z)`` solutions.
    """
    t = ys - y1
    u = y2 - y1
    v = z2 - z1
    if t == 0.0:
        return 0, np.nan, np.nan, np.nan, np.nan
    rr = u * u + v * v
    # parabola: y = (t^2 - z^2) / (2 t); bisector: 2 u y + 2 v z = rr
    qa = -u
    qb = 2.0 * v * t
    qc = t * (u * t - rr)
    zs = np.empty(2)
    n = 0
    scale = abs(qb) + abs(u * t) + 1e-300
    if abs(qa) <= EPS_DET * scale:
        if qb != 0.0:
            zs[0] = -qc / qb
            n = 1
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            sq = math.sqrt(disc)
            # numerically stable pair
            q = -0.5 * (qb + sq) if qb >= 0 else -0.5 * (qb - sq)
            if q != 0.0:
                zs[0] = q / qa
                zs[1] = qc / q
                n = 2
            else:
                zs[0] = 0.0
                n = 1
    ya = np.nan
    za = np.nan
    yb = np.nan
    zb = np.nan
    if n >= 1:
        za = zs[0]
        ya = (t * t - za * za) / (2.0 * t)
    if n == 2:
        zb = zs[1]
        yb = (t * t - zb * zb) / (2.0 * t)
    return n, ya + y1, za + z1, yb + y1, zb + z1


def voronoi_vertex_points(p1, p2, p3):
    """Voronoi vertex of three points ``(y, z)``; ``None`` when (near) collinear."""
    ok, y, z = _vertex3(float(p1[0]), float(p1[1]), float(p2[0]), float(p2[1]),
                        float(p3[0]), float(p3[1]), 0.0, 0.0, 0.0)
    return (y, z) if ok else None


def voronoi_vertex_segment_points(p1, s: SeedSegment, p2):
    """Vertex between point ``p1``, the interior of segment ``s`` and point ``p2``.

    Only solutions whose depth lies within ``[s.z_in, s.z_out]`` count; when
    both roots qualify the one further along +y is returned.  A degenerate
    segment falls back to the three-point case.
    """
    s = SeedSegment(*s)
    if s.z_in == s.z_out:
        return voronoi_vertex_points(p1, (s.y, s.z_in), p2)
    n, ya, za, yb, zb = _vertex_segment_roots(float(p1[0]), float(p1[1]), float(s.y),
                                              float(p2[0]), float(p2[1]))
    best = None
    for k, (y, z) in enumerate(((ya, za), (yb, zb))):
        if k < n and s.z_in <= z <= s.z_out and (best is None or y > best[0]):
            best = (y, z)
    return best


def distance_to_segment(p, s: SeedSegment) -> float:
    dz = max(s.z_in - p[1], 0.0, p[1] - s.z_out)
    return math.hypot(p[0] - s.y, dz)


@njit(cache=True, nogil=True)
def _removal_y(ya, la, ha, yb, lb, hb, yc, lc, hc):
    """Sweep position from which the middle seed b is dominated for good.

    Only seeds no newer than both neighbours shrink monotonically, so other
    triples return NaN (kept until their distance retirement).  Neighbours
    are represented by their facing endpoints, which can only delay the
    answer; b's own feature (interior or an endpoint) is matched to the
    vertex depth so the answer is never early.
    """
    if yb > ya or yb > yc:
        return np.nan
    best = -np.inf
    n, y1, z1, y2, z2 = _vertex_segment_roots(ya, ha, yb, yc, lc)
    if n >= 1 and lb <= z1 <= hb:
        best = max(best, y1)
    if n == 2 and lb <= z2 <= hb:
        best = max(best, y2)
    ok, yv, zv = _vertex3(ya, ha, yb, lb, yc, lc, 0.0, 0.0, 0.0)
    if ok and zv <= lb:
        best = max(best, yv)
    ok, yv, zv = _vertex3(ya, ha, yb, hb, yc, lc, 0.0, 0.0, 0.0)
    if ok and zv >= hb:
        best = max(best, yv)
    if best == -np.inf:
        return np.nan
    return best


# compiled sweep -----------------------------------------------------------------


@njit(cache=True, nogil=True)
def reach_rows(r2, s):
    """Largest integer k with ``(k * s)**2 <= r2`` (-1 when r2 < 0)."""
    if r2 < 0.0:
        return -1
    k = int(math.floor(math.sqrt(r2) / s))
    while ((k + 1) * s) ** 2 <= r2:
        k += 1
    while k > 0 and (k * s) ** 2 > r2:
        k -= 1
    return k


@njit(cache=True, nogil=True)
def _event_row(Llo, Lhi, Ly, m, s):
    yv = _removal_y(Ly[m - 1] * s, Llo[m - 1], Lhi[m - 1], Ly[m] * s, Llo[m], Lhi[m],
                    Ly[m + 1] * s, Llo[m + 1], Lhi[m + 1])
    if np.isnan(yv):
        return -1
    return int(math.ceil(yv / s - ROW_SLACK))


@njit(cache=True, nogil=True)
def _sweep_kernel(ptr, lo_in, hi_in, r, s, extrude, eps):
    """Forward half sweep of one slice.

    ``extrude`` selects the output: the active seeds themselves tagged with
    their squared transfer radius ``r^2 - d^2`` (touching pieces with equal
    tags fused), or their dilated cross-sections merged per row.
    Returns ``(out_ptr, out_lo, out_hi, out_w, max_active)``.
    """
    nrows = ptr.shape[0] - 1
    r2 = r * r
    K = reach_rows(r2, s)
    Llo = np.empty(16)
    Lhi = np.empty(16)
    Ly = np.empty(16, np.int64)
    Lid = np.empty(16, np.int64)
    n = 0
    alive = np.zeros(16, np.int64)
    idlo = np.empty(16)
    nid = 0
    heap = [(0, 0, 0, 0, 0)]
    heap.pop()
    seq = 0
    out_ptr = np.zeros(nrows + 1, np.int64)
    out_lo = np.empty(64)
    out_hi = np.empty(64)
    out_w = np.empty(64)
    m = 0
    raw_lo = np.empty(16)
    raw_hi = np.empty(16)
    max_active = 0
    # scratch for rebuilding the active set
    Nlo = np.empty(16)
    Nhi = np.empty(16)
    Ny = np.empty(16, np.int64)
    Nid = np.empty(16, np.int64)
    Nch = np.zeros(16, np.int64)
    Flo = np.empty(16)
    Fhi = np.empty(16)
    Fy = np.empty(16, np.int64)
    Fid = np.empty(16, np.int64)
    Fch = np.zeros(16, np.int64)
    for row in range(nrows):
        k0 = ptr[row]
        k1 = ptr[row + 1]
        for phase in range(2):
            if phase == 1 and k1 > k0:
                # occlusion: old pieces lose whatever the new seeds cover
                cap = n + 2 * (k1 - k0) + 2
                if Nlo.shape[0] < cap:
                    Nlo = np.empty(2 * cap)
                    Nhi = np.empty(2 * cap)
                    Ny = np.empty(2 * cap, np.int64)
                    Nid = np.empty(2 * cap, np.int64)
                if Flo.shape[0] < cap:
                    Nch = np.zeros(2 * cap, np.int64)
                    Flo = np.empty(2 * cap)
                    Fhi = np.empty(2 * cap)
                    Fy = np.empty(2 * cap, np.int64)
                    Fid = np.empty(2 * cap, np.int64)
                    Fch = np.zeros(2 * cap, np.int64)
                nf = 0
                j0 = k0
                for p in range(n):
                    a = Llo[p]
                    b = Lhi[p]
                    while j0 < k1 and hi_in[j0] <= a:
                        j0 += 1
                    if j0 >= k1 or lo_in[j0] >= b:
                        Flo[nf] = a
                        Fhi[nf] = b
                        Fy[nf] = Ly[p]
                        Fid[nf] = Lid[p]
                        Fch[nf] = 0
                        nf += 1
                        continue
                    alive[Lid[p]] = 0
                    cur = a
                    k = j0
                    while k < k1 and lo_in[k] < b:
                        if lo_in[k] > cur:
                            Flo[nf] = cur
                            Fhi[nf] = lo_in[k]
                            Fy[nf] = Ly[p]
                            Fid[nf] = -1
                            Fch[nf] = 1
                            nf += 1
                        cur = max(cur, hi_in[k])
                        k += 1
                    if cur < b:
                        Flo[nf] = cur
                        Fhi[nf] = b
                        Fy[nf] = Ly[p]
                        Fid[nf] = -1
                        Fch[nf] = 1
                        nf += 1
                # merge fragments with the new seeds by depth
                nn = 0
                f = 0
                ks = k0
                while f < nf or ks < k1:
                    if ks >= k1 or (f < nf and Flo[f] < lo_in[ks]):
                        Nlo[nn] = Flo[f]
                        Nhi[nn] = Fhi[f]
                        Ny[nn] = Fy[f]
                        Nid[nn] = Fid[f]
                        Nch[nn] = Fch[f]
                        f += 1
                    else:
                        Nlo[nn] = lo_in[ks]
                        Nhi[nn] = hi_in[ks]
                        Ny[nn] = row
                        Nid[nn] = -1
                        Nch[nn] = 1
                        ks += 1
                    if Nid[nn] < 0:
                        alive = _ivl.grow_i(alive, nid + 1)
                        idlo = _ivl.grow_f(idlo, nid + 1)
                        alive[nid] = 1
                        idlo[nid] = Nlo[nn]
                        Nid[nn] = nid
                        heapq.heappush(heap, (Ny[nn] + K + 1, seq, nid, -1, -1))
                        seq += 1
                        nid += 1
                    nn += 1
                # swap buffers
                Llo, Nlo = Nlo, Llo
                Lhi, Nhi = Nhi, Lhi
                Ly, Ny = Ny, Ly
                Lid, Nid = Nid, Lid
                n = nn
                # vertex checks around every changed position
                last = -2
                for p in range(n):
                    if Nch[p] == 1:
                        for mm in range(max(p - 1, last + 1), min(p + 2, n)):
                            if 1 <= mm <= n - 2:
                                ev = _event_row(Llo, Lhi, Ly, mm, s)
                                if ev >= 0:
                                    heapq.heappush(heap, (max(ev, row), seq, Lid[mm], Lid[mm - 1], Lid[mm + 1]))
                                    seq += 1
                            last = mm
                Nch[:nn] = 0
            # retire seeds: distance events and passed vertices
            while len(heap) > 0 and heap[0][0] <= row:
                ev_row, _, sid, left, right = heapq.heappop(heap)
                if alive[sid] == 0:
                    continue
                p = np.searchsorted(Llo[:n], idlo[sid])
                if p >= n or Lid[p] != sid:
                    continue
                if left >= 0:
                    if p == 0 or p >= n - 1 or Lid[p - 1] != left or Lid[p + 1] != right:
                        continue
                alive[sid] = 0
                for q in range(p, n - 1):
                    Llo[q] = Llo[q + 1]
                    Lhi[q] = Lhi[q + 1]
                    Ly[q] = Ly[q + 1]
                    Lid[q] = Lid[q + 1]
                n -= 1
                for mm in (p - 1, p):
                    if 1 <= mm <= n - 2:
                        ev = _event_row(Llo, Lhi, Ly, mm, s)
                        if ev >= 0:
                            heapq.heappush(heap, (max(ev, row), seq, Lid[mm], Lid[mm - 1], Lid[mm + 1]))
                            seq += 1
        if n > max_active:
            max_active = n
        # emit this row
        if extrude:
            out_lo = _ivl.grow_f(out_lo, m + n)
            out_hi = _ivl.grow_f(out_hi, m + n)
            out_w = _ivl.grow_f(out_w, m + n)
            first = m
            for p in range(n):
                d = (row - Ly[p]) * s
                w = r2 - d * d
                if m > first and out_hi[m - 1] == Llo[p] and out_w[m - 1] == w:
                    out_hi[m - 1] = Lhi[p]
                else:
                    out_lo[m] = Llo[p]
                    out_hi[m] = Lhi[p]
                    out_w[m] = w
                    m += 1
        else:
            raw_lo = _ivl.grow_f(raw_lo, n)
            raw_hi = _ivl.grow_f(raw_hi, n)
            for p in range(n):
                d = (row - Ly[p]) * s
                h = math.sqrt(max(r2 - d * d, 0.0))
                raw_lo[p] = Llo[p] - h
                raw_hi[p] = Lhi[p] + h
            out_lo, out_hi, m = _ivl.union_sorted_into(raw_lo, raw_hi, n, eps, out_lo, out_hi, m)
            out_w = _ivl.grow_f(out_w, m)
        out_ptr[row + 1] = m
    return out_ptr, out_lo[:m].copy(), out_hi[:m].copy(), out_w[:m].copy(), max_active


def slice_to_csr(rows):
    """Pack rows of ``(z_in, z_out)`` pairs into normalized CSR arrays."""
    ptr = np.zeros(len(rows) + 1, np.int64)
    chunks = []
    for k, row in enumerate(rows):
        col = normalize_column(row)
        chunks.extend(col)
        ptr[k + 1] = ptr[k] + len(col)
    data = np.array(chunks, np.float64).reshape(-1, 2)
    return ptr, np.ascontiguousarray(data[:, 0]), np.ascontiguousarray(data[:, 1])


def _check_sweep_args(radius, spacing, direction, emit):
    if not (math.isfinite(radius) and radius >= 0):
        raise InvalidInputError(f"radius must be finite and >= 0, got {radius}")
    if not (math.isfinite(spacing) and spacing > 0):
        raise InvalidInputError(f"spacing must be positive, got {spacing}")
    if direction not in ("forward", "backward"):
        raise InvalidInputError(f"direction must be 'forward' or 'backward', got {direction!r}")
    if emit not in ("dilate", "extrude"):
        raise InvalidInputError(f"emit must be 'dilate' or 'extrude', got {emit!r}")


def half_sweep(rows, radius, direction="forward", emit="dilate", spacing=1.0,
               eps_merge=0.0, engine="kernel"):
    """One directional sweep over a slice; returns one output list per input row.

    ``emit="dilate"`` gives the merged cross-sections of every active seed's
    disk-swept segment (``list[Interval]``).  ``emit="extrude"`` gives the
    active seeds themselves tagged with the transfer radius
    ``sqrt(r^2 - d^2)``, as ``WeightedSegment(x=row position, ...)``.
    The output covers exactly the input rows: pad with empty rows to see
    material spill past the ends.
    """
    _check_sweep_args(radius, spacing, direction, emit)
    rows = list(rows)
    if direction == "backward":
        rows = rows[::-1]
    if engine == "kernel":
        ptr, lo, hi = slice_to_csr(rows)
        optr, olo, ohi, ow, _ = _sweep_kernel(ptr, lo, hi, float(radius), float(spacing),
                                              emit == "extrude", float(eps_merge))
        out = []
        for k in range(len(rows)):
            a, b = optr[k], optr[k + 1]
            if emit == "extrude":
                x = k if direction == "forward" else len(rows) - 1 - k
                out.append([WeightedSegment(x, z0, z1, math.sqrt(max(w, 0.0)))
                            for z0, z1, w in zip(olo[a:b].tolist(), ohi[a:b].tolist(), ow[a:b].tolist())])
            else:
                out.append([Interval(z0, z1) for z0, z1 in zip(olo[a:b].tolist(), ohi[a:b].tolist())])
    elif engine == "reference":
        state = SweepState(radius, spacing)
        out = []
        for k, row in enumerate(rows):
            state.advance(k)
            for z0, z1 in normalize_column(row):
                state.insert(SeedSegment(k, z0, z1))
            state.advance(k)
            if emit == "extrude":
                x = k if direction == "forward" else len(rows) - 1 - k
                out.append([WeightedSegment(x, w.z_in, w.z_out, w.radius) for w in state.extrude_row()])
            else:
                out.append(state.dilate_row(eps_merge))
    else:
        raise InvalidInputError(f"unknown engine {engine!r}")
    if direction == "backward":
        out = out[::-1]
    return out


def dilate_slice(rows, radius, spacing=1.0, eps_merge=0.0, engine="kernel"):
    """Exact 2D dilation of a slice: union of the forward and backward sweeps."""
    fwd = half_sweep(rows, radius, "forward", "dilate", spacing, eps_merge, engine)
    bwd = half_sweep(rows, radius, "backward", "dilate", spacing, eps_merge, engine)
    return [normalize_column(list(a) + list(b), eps_merge) for a, b in zip(fwd, bwd)]


class Event(NamedTuple):
    y_fire: float
    kind: str  # "deactivate" or "voronoi_vertex"
    target: SeedSegment


class _Piece:
    __slots__ = ("y", "z_in", "z_out", "alive")

    def __init__(self, y, z_in, z_out):
        self.y, self.z_in, self.z_out, self.alive = y, z_in, z_out, True

    def seed(self):
        return SeedSegment(self.y, self.z_in, self.z_out)


class SweepState:
    """Incremental active-seed set for a forward sweep (reference implementation).

    Seed positions ``y`` are row coordinates; depths and the radius are world
    units, with rows ``spacing`` apart.  ``advance(k)`` moves the sweep line
    to row ``k`` and fires every due event.  A distance event at
    ``y_fire = y_seed + r / spacing`` fires once the line is strictly beyond
    it; a vertex event fires once the line has reached it.
    """

    def __init__(self, radius, spacing=1.0):
        _check_sweep_args(radius, spacing, "forward", "dilate")
        self.radius = float(radius)
        self.spacing = float(spacing)
        self.y = -math.inf
        self._pieces: list[_Piece] = []
        self._queue: list = []
        self._seq = itertools.count()

    @property
    def active(self) -> list[SeedSegment]:
        return [p.seed() for p in self._pieces]

    @property
    def events(self) -> list[Event]:
        live = [e for e in self._queue if self._valid(e)]
        return [Event(e[0], "deactivate" if e[1] == 0 else "voronoi_vertex", e[3].seed()) for e in sorted(live)]

    def _valid(self, e):
        piece = e[3]
        if not piece.alive:
            return False
        if e[1] == 0:
            return True
        k = self._index(piece)
        return 0 < k < len(self._pieces) - 1 and self._pieces[k - 1] is e[4] and self._pieces[k + 1] is e[5]

    def _index(self, piece):
        k = bisect.bisect_left([p.z_in for p in self._pieces], piece.z_in)
        return k if k < len(self._pieces) and self._pieces[k] is piece else -1

    def _push_distance(self, piece):
        heapq.heappush(self._queue, (piece.y + self.radius / self.spacing, 0, next(self._seq), piece, None, None))

    def _push_vertex(self, k):
        if not 0 < k < len(self._pieces) - 1:
            return
        a, b, c = self._pieces[k - 1:k + 2]
        s = self.spacing
        yv = _removal_y(a.y * s, a.z_in, a.z_out, b.y * s, b.z_in, b.z_out, c.y * s, c.z_in, c.z_out)
        if not math.isnan(yv):
            heapq.heappush(self._queue, (yv / s, 1, next(self._seq), b, a, c))

    def _due(self, e):
        if e[1] == 0:
            return ((self.y - e[3].y) * self.spacing) ** 2 > self.radius ** 2
        return self.y >= e[0] - ROW_SLACK

    def advance(self, row):
        """Move the sweep line to ``row`` and retire every seed that is due."""
        y = float(row)
        if y < self.y:
            raise InvalidInputError("the sweep line only moves forward")
        self.y = y
        while self._queue and self._due(self._queue[0]):
            e = heapq.heappop(self._queue)
            if not self._valid(e):
                continue
            k = self._index(e[3])
            e[3].alive = False
            del self._pieces[k]
            self._push_vertex(k - 1)
            self._push_vertex(k)

    def insert(self, seed: SeedSegment):
        """Add a seed on the current row; it occludes older pieces it overlaps."""
        seed = SeedSegment(*map(float, seed))
        if not seed.z_in < seed.z_out:
            raise InvalidInputError(f"seed needs z_in < z_out, got {seed}")
        if seed.y != self.y:
            raise InvalidInputError(f"seed at y={seed.y} is not on the current row y={self.y}")
        pieces = []
        changed = []
        for p in self._pieces:
            if p.z_out <= seed.z_in or p.z_in >= seed.z_out:
                pieces.append(p)
                continue
            p.alive = False
            for z0, z1 in ((p.z_in, seed.z_in), (seed.z_out, p.z_out)):
                if z1 > z0:
                    q = _Piece(p.y, z0, z1)
                    pieces.append(q)
                    changed.append(q)
                    self._push_distance(q)
        new = _Piece(seed.y, seed.z_in, seed.z_out)
        pieces.append(new)
        changed.append(new)
        self._push_distance(new)
        pieces.sort(key=lambda p: p.z_in)
        self._pieces = pieces
        for q in changed:
            k = self._index(q)
            for m in (k - 1, k, k + 1):
                self._push_vertex(m)
        return new.seed()

    def dilate_row(self, eps_merge=0.0) -> list[Interval]:
        r2 = self.radius * self.radius
        raw = []
        for p in self._pieces:
            d = (self.y - p.y) * self.spacing
            h = math.sqrt(max(r2 - d * d, 0.0))
            raw.append((p.z_in - h, p.z_out + h))
        return normalize_column(raw, eps_merge)

    def extrude_row(self) -> list[WeightedSegment]:
        r2 = self.radius * self.radius
        out = []
        for p in self._pieces:
            d = (self.y - p.y) * self.spacing
            rad = math.sqrt(max(r2 - d * d, 0.0))
            if out and out[-1].z_out == p.z_in and out[-1].radius == rad:
                out[-1] = out[-1]._replace(z_out=p.z_out)
            else:
                out.append(WeightedSegment(self.y, p.z_in, p.z_out, rad))
        return out
