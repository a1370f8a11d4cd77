"""Brute-force dilation: every seed emits its full disk or ball footprint.

These are the semantic definitions the sweeps are tested against.  The 3D
oracle evaluates ``h**2 = (r**2 - (dy*s)**2) - (dx*s)**2`` in exactly the
order the two sweep stages do, so both engines produce the same floats.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

from . import _ivl
from .dexel import DexelGrid, Interval, normalize_column, pad_grid
from .errors import InvalidInputError
from .sweep_voronoi import WeightedSegment, reach_rows


def capsule_pieces(rows, radius=None, spacing=1.0):
    """Yield ``(row, z_lo, z_hi)`` for every seed and every row it reaches.

    With ``radius=None`` the rows hold ``WeightedSegment``s and each uses its
    own radius; otherwise rows hold plain ``(z_in, z_out)`` pairs.
    """
    n = len(rows)
    for k, row in enumerate(rows):
        for seg in row:
            if radius is None:
                seg = WeightedSegment(*seg)
                z0, z1, rad = seg.z_in, seg.z_out, seg.radius
            else:
                (z0, z1), rad = seg, radius
            if not (math.isfinite(rad) and rad >= 0):
                raise InvalidInputError(f"radius must be finite and >= 0, got {rad}")
            r2 = rad * rad
            reach = reach_rows(r2, spacing)
            for t in range(k - reach, k + reach + 1):
                if 0 <= t < n:
                    d = (t - k) * spacing
                    h = math.sqrt(r2 - d * d)
                    yield t, z0 - h, z1 + h


def brute_dilate_2d(rows, radius=None, spacing=1.0, eps_merge=0.0):
    """Row-wise union of capsule cross-sections, on the given rows only."""
    out = [[] for _ in rows]
    for t, a, b in capsule_pieces(rows, radius, spacing):
        out[t].append((a, b))
    return [normalize_column(r, eps_merge) for r in out]


@njit(cache=True, nogil=True)
def _brute_rows(ptr, data, nx, ny, j0, j1, di, dj, r2, s, eps):
    """Output columns of lattice rows ``j0 <= j < j1``, gathered from all offsets."""
    optr = np.zeros((j1 - j0) * nx + 1, np.int64)
    out_lo = np.empty(64)
    out_hi = np.empty(64)
    raw_lo = np.empty(64)
    raw_hi = np.empty(64)
    m = 0
    for j in range(j0, j1):
        for i in range(nx):
            n = 0
            for q in range(di.shape[0]):
                si = i - di[q]
                sj = j - dj[q]
                if si < 0 or si >= nx or sj < 0 or sj >= ny:
                    continue
                c = sj * nx + si
                k = ptr[c + 1] - ptr[c]
                if k == 0:
                    continue
                dy = dj[q] * s
                dx = di[q] * s
                h = math.sqrt((r2 - dy * dy) - dx * dx)
                raw_lo = _ivl.grow_f(raw_lo, n + k)
                raw_hi = _ivl.grow_f(raw_hi, n + k)
                for t in range(ptr[c], ptr[c + 1]):
                    raw_lo[n] = data[t, 0] - h
                    raw_hi[n] = data[t, 1] + h
                    n += 1
            out_lo, out_hi, m = _ivl.normalize_into(raw_lo, raw_hi, n, eps, out_lo, out_hi, m)
            optr[(j - j0) * nx + i + 1] = m
    return optr, out_lo[:m].copy(), out_hi[:m].copy()


def ball_offsets(r, spacing):
    """Lattice offsets ``(di, dj)`` whose ray lies within distance ``r``."""
    r2 = r * r
    k = reach_rows(r2, spacing)
    di, dj = [], []
    for b in range(-k, k + 1):
        dy = b * spacing
        w = r2 - dy * dy
        for a in range(-k, k + 1):
            dx = a * spacing
            if w - dx * dx >= 0.0:
                di.append(a)
                dj.append(b)
    return np.array(di, np.int64), np.array(dj, np.int64)


def _chunks(n, parts):
    parts = max(1, min(n, parts))
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def stitch(parts, nx, ny):
    """Concatenate per-chunk CSR results (in lattice-row order) into one grid body."""
    ptr = np.zeros(nx * ny + 1, np.int64)
    pos = 0
    los, his = [], []
    for optr, lo, hi in parts:
        n = optr.size - 1
        ptr[pos + 1:pos + n + 1] = optr[1:] + ptr[pos]
        pos += n
        los.append(lo)
        his.append(hi)
    lo = np.concatenate(los) if los else np.zeros(0)
    hi = np.concatenate(his) if his else np.zeros(0)
    return ptr, np.stack([lo, hi], axis=1)


def brute_dilate_3d(grid: DexelGrid, r: float, threads: int | None = None,
                    eps_merge: float | None = None) -> DexelGrid:
    """Union of balls of radius ``r`` around every dexel segment, sampled on the rays.

    The output grid is padded like the sweep engine's: ``ceil(r / spacing)``
    columns per lateral side and ``r`` on both ends of the z domain.
    """
    if not (math.isfinite(r) and r >= 0):
        raise InvalidInputError(f"radius must be finite and >= 0, got {r}")
    eps = grid.eps_merge if eps_merge is None else eps_merge
    k = math.ceil(r / grid.spacing)
    g = pad_grid(grid, k, r)
    di, dj = ball_offsets(r, g.spacing)
    threads = threads or 1
    chunks = _chunks(g.ny, 4 * threads)

    def work(span):
        return _brute_rows(g.ptr, g.data, g.nx, g.ny, span[0], span[1], di, dj, r * r, g.spacing, eps)

    with ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(work, chunks))
    ptr, data = stitch(parts, g.nx, g.ny)
    return g.like(ptr, data)
