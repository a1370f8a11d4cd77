"""Exact 3D dilation and erosion of dexel grids by a ball.

Stage 1 sweeps every x-slice along y.  Each active seed is extruded, not
dilated: on lattice row ``j`` it reappears as the same depth range, tagged
with the radius of the ball's cross-section in that plane,
``sqrt(r**2 - d**2)`` for a row distance ``d``.  The forward and backward
results are merged per row, keeping the larger radius where ranges overlap.

Stage 2 sweeps every y-slice of that intermediate set along x and dilates
each piece by its own radius (power-diagram capsule sweep), which yields the
final columns.  Slices are independent within a stage, so each stage is
split across a thread pool; chunk results are stitched in slice order, which
keeps the output identical for any thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

from . import _ivl
from .dexel import DexelGrid, align_to, grid_complement, pad_grid
from .errors import InvalidInputError
from .oracle import _chunks, brute_dilate_3d, stitch
from .sweep_power import _power_dilate_csr
from .sweep_voronoi import _sweep_kernel

ENGINES = ("sweep", "brute")


def radius_transfer(d: float, r: float) -> float:
    """Radius of the section of a ball of radius ``r`` at distance ``d`` from its centre."""
    if not (0 <= d <= r):
        raise InvalidInputError(f"need 0 <= d <= r, got d={d}, r={r}")
    return math.sqrt(r * r - d * d)


def default_threads() -> int:
    return os.cpu_count() or 1


@njit(cache=True, nogil=True)
def _reverse_rows(ptr, lo, hi):
    n = ptr.shape[0] - 1
    rptr = np.zeros(n + 1, np.int64)
    rlo = np.empty(lo.shape[0])
    rhi = np.empty(hi.shape[0])
    for k in range(n):
        src = n - 1 - k
        a = ptr[src]
        c = ptr[src + 1] - a
        for t in range(c):
            rlo[rptr[k] + t] = lo[a + t]
            rhi[rptr[k] + t] = hi[a + t]
        rptr[k + 1] = rptr[k] + c
    return rptr, rlo, rhi


@njit(cache=True, nogil=True)
def _prune_cones(lo, hi, w, a, b):
    """Trim pieces ``a..b`` of one intermediate column to where their disks are not redundant.

    A centre at depth z with radius rho is covered by a centre z' of radius
    rho' whenever ``rho + |z - z'| <= rho'``.  Scanning left to right with the
    best ``rho' + z'`` and right to left with the best ``z' - rho'`` finds, for
    each piece, the closed sub-range outside every strictly covering cone.
    Compacts in place and returns the new end index.
    """
    n = b - a
    if n <= 1:
        return b
    start = np.empty(n)
    best = -np.inf
    for t in range(n):
        rho = math.sqrt(w[a + t])
        start[t] = max(lo[a + t], best - rho)
        best = max(best, rho + hi[a + t])
    best = np.inf
    end = np.empty(n)
    for t in range(n - 1, -1, -1):
        rho = math.sqrt(w[a + t])
        end[t] = min(hi[a + t], best + rho)
        best = min(best, lo[a + t] - rho)
    q = a
    for t in range(n):
        if start[t] < end[t]:
            lo[q] = start[t]
            hi[q] = end[t]
            w[q] = w[a + t]
            q += 1
    return q


@njit(cache=True, nogil=True)
def _stage1_batch(ptr, data, ny, i0, i1, r, s):
    """Extrude x-slices ``i0 <= i < i1`` (input is x-major: column ``i * ny + j``)."""
    nout = (i1 - i0) * ny
    optr = np.zeros(nout + 1, np.int64)
    out_lo = np.empty(64)
    out_hi = np.empty(64)
    out_w = np.empty(64)
    m = 0
    for i in range(i0, i1):
        a = ptr[i * ny]
        b = ptr[(i + 1) * ny]
        base = (i - i0) * ny
        if a == b:
            for j in range(ny):
                optr[base + j + 1] = m
            continue
        sp = ptr[i * ny:(i + 1) * ny + 1] - a
        lo = data[a:b, 0].copy()
        hi = data[a:b, 1].copy()
        fptr, flo, fhi, fw, _ = _sweep_kernel(sp, lo, hi, r, s, True, 0.0)
        rptr, rlo, rhi = _reverse_rows(sp, lo, hi)
        bptr, blo, bhi, bw, _ = _sweep_kernel(rptr, rlo, rhi, r, s, True, 0.0)
        for j in range(ny):
            jb = ny - 1 - j
            out_lo, out_hi, out_w, m = _ivl.envelope_into(
                flo, fhi, fw, fptr[j], fptr[j + 1], blo, bhi, bw, bptr[jb], bptr[jb + 1],
                out_lo, out_hi, out_w, m)
            m = _prune_cones(out_lo, out_hi, out_w, optr[base + j], m)
            optr[base + j + 1] = m
    return optr, out_lo[:m].copy(), out_hi[:m].copy(), out_w[:m].copy()


@njit(cache=True, nogil=True)
def _transpose_rows(ptr, nmajor, nminor):
    """Reorder a major-by-minor CSR into minor-by-major; returns new ptr and gather index."""
    n = nmajor * nminor
    counts = np.empty(n, np.int64)
    for a in range(nmajor):
        for b in range(nminor):
            counts[b * nmajor + a] = ptr[a * nminor + b + 1] - ptr[a * nminor + b]
    nptr = np.zeros(n + 1, np.int64)
    for c in range(n):
        nptr[c + 1] = nptr[c] + counts[c]
    rows = np.empty(nptr[n], np.int64)
    for a in range(nmajor):
        for b in range(nminor):
            src = a * nminor + b
            dst = b * nmajor + a
            for t in range(ptr[src + 1] - ptr[src]):
                rows[nptr[dst] + t] = ptr[src] + t
    return nptr, rows


@njit(cache=True, nogil=True)
def _stage2_batch(ptr, lo, hi, w, nx, j0, j1, s, eps, bare_lo, bare_hi):
    """Power-dilate y-slices ``j0 <= j < j1`` (intermediate is y-major)."""
    optr = np.zeros((j1 - j0) * nx + 1, np.int64)
    out_lo = np.empty(64)
    out_hi = np.empty(64)
    m = 0
    for j in range(j0, j1):
        a = ptr[j * nx]
        b = ptr[(j + 1) * nx]
        base = (j - j0) * nx
        if a == b:
            for i in range(nx):
                optr[base + i + 1] = m
            continue
        sp = ptr[j * nx:(j + 1) * nx + 1] - a
        # contiguous copies keep the kernel on its C-layout specialization
        rptr, rlo, rhi = _power_dilate_csr(sp, lo[a:b].copy(), hi[a:b].copy(), w[a:b].copy(), s, eps, False,
                                           bare_lo, bare_hi)
        out_lo = _ivl.grow_f(out_lo, m + rlo.shape[0])
        out_hi = _ivl.grow_f(out_hi, m + rlo.shape[0])
        out_lo[m:m + rlo.shape[0]] = rlo
        out_hi[m:m + rlo.shape[0]] = rhi
        for i in range(nx):
            optr[base + i + 1] = m + rptr[i + 1]
        m += rlo.shape[0]
    return optr, out_lo[:m].copy(), out_hi[:m].copy()


def _sweep_dilate(g: DexelGrid, r: float, threads: int, eps: float, bare=(-np.inf, np.inf)) -> DexelGrid:
    """Two-stage dilation on an already padded grid (same footprint in and out).

    Depths in ``bare`` mark ends that continue past a window: they get no disk.
    """
    s = g.spacing
    t = g.transposed()  # x-major: x-slice i holds rows j contiguously
    with ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(lambda span: _stage1_batch(t.ptr, t.data, g.ny, span[0], span[1], r, s),
                              _chunks(g.nx, 4 * threads)))
        mptr = np.zeros(g.nx * g.ny + 1, np.int64)
        pos = 0
        for optr, _, _, _ in parts:
            n = optr.size - 1
            mptr[pos + 1:pos + n + 1] = optr[1:] + mptr[pos]
            pos += n
        mlo = np.concatenate([p[1] for p in parts])
        mhi = np.concatenate([p[2] for p in parts])
        mw = np.concatenate([p[3] for p in parts])
        yptr, rows = _transpose_rows(mptr, g.nx, g.ny)
        mlo, mhi, mw = mlo[rows], mhi[rows], mw[rows]
        parts = list(pool.map(lambda span: _stage2_batch(yptr, mlo, mhi, mw, g.nx, span[0], span[1], s, eps,
                                                                 bare[0], bare[1]),
                              _chunks(g.ny, 4 * threads)))
    ptr, data = stitch(parts, g.nx, g.ny)
    return g.like(ptr, data)


def _check(r, engine):
    if not (isinstance(r, (int, float, np.floating)) and math.isfinite(r) and r >= 0):
        raise InvalidInputError(f"radius must be finite and >= 0, got {r}")
    if engine not in ENGINES:
        raise InvalidInputError(f"engine must be one of {ENGINES}, got {engine!r}")


def dilate_grid(grid: DexelGrid, r: float, threads: int | None = None, engine: str = "sweep",
                eps_merge: float | None = None) -> DexelGrid:
    """Union of balls of radius ``r`` (world units) around the solid, sampled on the rays.

    The result is padded by ``ceil(r / spacing)`` columns on each lateral
    side and by ``r`` on both ends of the z domain; its origin records the
    shift.  ``eps_merge`` defaults to the input grid's tolerance.
    """
    _check(r, engine)
    r = float(r)
    threads = threads or default_threads()
    eps = grid.eps_merge if eps_merge is None else eps_merge
    if engine == "brute":
        return brute_dilate_3d(grid, r, threads, eps)
    k = math.ceil(r / grid.spacing)
    return _sweep_dilate(pad_grid(grid, k, r), r, threads, eps)


def erode_grid(grid: DexelGrid, r: float, threads: int | None = None, engine: str = "sweep",
               eps_merge: float | None = None) -> DexelGrid:
    """Points of the solid farther than ``r`` from its complement; same footprint as the input.

    Everything outside the footprint and z domain counts as empty space, so
    the complement is taken on a window padded by the reach of the ball.
    """
    _check(r, engine)
    r = float(r)
    eps = grid.eps_merge if eps_merge is None else eps_merge
    k = math.ceil(r / grid.spacing)
    window = pad_grid(grid, k, r)
    outside = grid_complement(window, eps)
    if engine == "brute":
        grown = brute_dilate_3d(outside, r, threads or default_threads(), eps)
        kept = grid_complement(align_to(grown, window), eps)
        return align_to(kept, grid)
    # Only columns of the original footprint matter, and every seed within
    # reach of them lies inside the window, so the window is swept as is
    # (results past its edges are clipped below).  The complement goes on
    # past the window: disks at its z bounds only cover depths that are
    # already empty space, so they are skipped.  Complement columns out of
    # reach of every solid column cannot change the answer and are dropped;
    # so are results on columns that were empty to begin with.
    solid = (np.diff(window.ptr) > 0).reshape(window.ny, window.nx)
    near = _spread(_spread(solid, k, 0), k, 1)
    grown = _sweep_dilate(_keep_columns(outside, near.ravel()), r, threads or default_threads(), eps,
                          window.z_domain)
    kept = grid_complement(align_to(grown, window), eps)
    return align_to(_keep_columns(kept, solid.ravel()), grid)


def _spread(mask: np.ndarray, k: int, axis: int) -> np.ndarray:
    """Boolean dilation of ``mask`` by ``k`` cells along one axis."""
    m = np.moveaxis(mask, axis, -1)
    c = np.zeros(m.shape[:-1] + (m.shape[-1] + 2 * k + 1,), np.int64)
    np.cumsum(np.pad(m, ((0, 0), (k, k))), axis=-1, out=c[..., 1:])
    return np.moveaxis(c[..., 2 * k + 1:] - c[..., :-2 * k - 1] > 0, -1, axis)


def _keep_columns(g: DexelGrid, keep: np.ndarray) -> DexelGrid:
    counts = np.where(keep, np.diff(g.ptr), 0)
    ptr = np.zeros(counts.size + 1, np.int64)
    np.cumsum(counts, out=ptr[1:])
    return g.like(ptr, g.data[np.repeat(keep, np.diff(g.ptr))])
