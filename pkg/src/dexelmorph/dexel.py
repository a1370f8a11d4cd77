"""Dexel data model: intervals, columns, grids and their set operations.

A dexel grid stores, for every cell of a regular 2D lattice, the sorted list
of depth intervals where a ray through the cell centre is inside the solid.
Depths stay continuous; only the lateral position is discretised.  Rays run
along z; the lattice axes are x (index ``i``) and y (index ``j``).

Columns live in one CSR block: column ``c = j * nx + i`` owns
``data[ptr[c]:ptr[c + 1]]``, an ``(m, 2)`` array of ``(z_in, z_out)`` rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from numba import njit

from . import _ivl
from .errors import IncompatibleGridsError, InvalidInputError

OPS = {"union": _ivl.UNION, "intersection": _ivl.INTERSECTION, "difference": _ivl.DIFFERENCE}

# relative merge tolerance, scaled by the bounding-box diagonal
EPS_REL = 1e-9


class Interval(NamedTuple):
    z_in: float
    z_out: float


DexelColumn = list  # list[Interval], sorted and pairwise separated by > eps


def _as_arrays(intervals) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray([tuple(iv) for iv in intervals], dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("interval bounds must be finite")
    return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


def _to_column(lo, hi) -> DexelColumn:
    return [Interval(float(a), float(b)) for a, b in zip(lo, hi)]


def normalize_column(raw: Iterable, eps_merge: float = 0.0) -> DexelColumn:
    """Sort, merge and clean a raw list of ``(z_in, z_out)`` pairs.

    Gaps of at most ``eps_merge`` are closed and merged intervals no longer
    than ``eps_merge`` are dropped.  Zero-length input intervals vanish;
    reversed ones (``z_in > z_out``) are rejected.
    """
    lo, hi = _as_arrays(raw)
    if np.any(lo > hi):
        raise InvalidInputError("interval with z_in > z_out")
    lo, hi = _ivl.normalize_arrays(lo, hi, float(eps_merge))
    return _to_column(lo, hi)


def column_boolean(a: Sequence, b: Sequence, op: str, eps_merge: float = 0.0) -> DexelColumn:
    if op not in OPS:
        raise InvalidInputError(f"unknown boolean op {op!r}")
    alo, ahi = _as_arrays(a)
    blo, bhi = _as_arrays(b)
    lo, hi = _ivl.boolean_arrays(alo, ahi, blo, bhi, OPS[op], float(eps_merge))
    return _to_column(lo, hi)


def complement_column(a: Sequence, domain: tuple[float, float], eps_merge: float = 0.0) -> DexelColumn:
    z_min, z_max = domain
    lo, hi = _as_arrays(a)
    if lo.size and (lo[0] < z_min or hi[-1] > z_max):
        raise InvalidInputError(f"column extends outside domain {domain}")
    dlo = np.array([z_min], np.float64)
    dhi = np.array([z_max], np.float64)
    lo, hi = _ivl.boolean_arrays(dlo, dhi, lo, hi, _ivl.DIFFERENCE, float(eps_merge))
    return _to_column(lo, hi)


def total_length(column: Iterable) -> float:
    return float(sum(b - a for a, b in column))


@dataclass(frozen=True)
class GridConfig:
    """How to cast a mesh into a grid: cells along the longest bbox axis,
    lateral padding in world units, and which world axis the rays follow."""

    resolution: int = 128
    padding: float = 0.0
    axis: str = "z"

    def __post_init__(self):
        if self.resolution < 2:
            raise InvalidInputError("resolution must be >= 2")
        if self.padding < 0:
            raise InvalidInputError("padding must be >= 0")
        if self.axis not in ("x", "y", "z"):
            raise InvalidInputError(f"axis must be x, y or z, got {self.axis!r}")


@dataclass(frozen=True, eq=False)
class DexelGrid:
    nx: int
    ny: int
    origin: tuple[float, float]
    spacing: float
    z_domain: tuple[float, float]
    ptr: np.ndarray = field(repr=False)
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise InvalidInputError("grid needs nx, ny >= 1")
        if not self.spacing > 0:
            raise InvalidInputError("spacing must be positive")
        if not self.z_domain[0] < self.z_domain[1]:
            raise InvalidInputError("z_domain must satisfy z_min < z_max")
        if self.ptr.shape != (self.nx * self.ny + 1,):
            raise InvalidInputError("ptr length does not match nx*ny+1")
        if self.data.shape != (int(self.ptr[-1]), 2):
            raise InvalidInputError("data shape does not match ptr")

    # construction -----------------------------------------------------------

    @classmethod
    def empty(cls, nx, ny, origin=(0.0, 0.0), spacing=1.0, z_domain=(0.0, 1.0)) -> "DexelGrid":
        return cls(nx, ny, tuple(map(float, origin)), float(spacing), tuple(map(float, z_domain)),
                   np.zeros(nx * ny + 1, np.int64), np.zeros((0, 2), np.float64))

    @classmethod
    def from_columns(cls, columns, origin=(0.0, 0.0), spacing=1.0, z_domain=None,
                     eps_merge=None) -> "DexelGrid":
        """Build from a nested ``columns[i][j]`` list of raw interval lists."""
        nx = len(columns)
        ny = len(columns[0]) if nx else 0
        flat = [columns[i][j] for j in range(ny) for i in range(nx)]
        if z_domain is None:
            zs = [v for col in flat for iv in col for v in iv]
            z_domain = (min(zs), max(zs)) if zs else (0.0, 1.0)
            if z_domain[0] == z_domain[1]:
                z_domain = (z_domain[0], z_domain[0] + 1.0)
        g = cls.empty(nx, ny, origin, spacing, z_domain)
        eps = g.eps_merge if eps_merge is None else eps_merge
        cols = [normalize_column(col, eps) for col in flat]
        return g.with_columns(cols)

    def with_columns(self, cols: Sequence[Sequence]) -> "DexelGrid":
        """Same geometry, new column contents (flat list in row-major order)."""
        counts = np.fromiter((len(c) for c in cols), np.int64, len(cols))
        ptr = np.zeros(len(cols) + 1, np.int64)
        np.cumsum(counts, out=ptr[1:])
        data = np.array([tuple(iv) for c in cols for iv in c], np.float64).reshape(-1, 2)
        g = self.like(ptr, data)
        g.check_domain()
        return g

    def like(self, ptr, data) -> "DexelGrid":
        return DexelGrid(self.nx, self.ny, self.origin, self.spacing, self.z_domain,
                         np.ascontiguousarray(ptr, np.int64), np.ascontiguousarray(data, np.float64).reshape(-1, 2))

    # queries ----------------------------------------------------------------

    @property
    def diagonal(self) -> float:
        return math.sqrt((self.nx * self.spacing) ** 2 + (self.ny * self.spacing) ** 2
                         + (self.z_domain[1] - self.z_domain[0]) ** 2)

    @property
    def eps_merge(self) -> float:
        return EPS_REL * self.diagonal

    @property
    def n_segments(self) -> int:
        return int(self.ptr[-1])

    def column(self, i: int, j: int) -> DexelColumn:
        c = j * self.nx + i
        seg = self.data[self.ptr[c]:self.ptr[c + 1]]
        return _to_column(seg[:, 0], seg[:, 1])

    def columns(self):
        """Yield ``((i, j), column)`` in storage order."""
        for j in range(self.ny):
            for i in range(self.nx):
                yield (i, j), self.column(i, j)

    def ray_xy(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + (i + 0.5) * self.spacing, self.origin[1] + (j + 0.5) * self.spacing)

    def volume(self) -> float:
        return float(np.sum(self.data[:, 1] - self.data[:, 0])) * self.spacing ** 2

    def same_geometry(self, other: "DexelGrid") -> bool:
        tol = 1e-9 * max(self.spacing, 1.0)
        return (self.nx == other.nx and self.ny == other.ny
                and abs(self.spacing - other.spacing) <= tol
                and all(abs(a - b) <= tol * 1e3 for a, b in zip(self.origin, other.origin))
                and all(abs(a - b) <= self.eps_merge for a, b in zip(self.z_domain, other.z_domain)))

    def check_domain(self):
        if self.data.size == 0:
            return
        if not np.all(np.isfinite(self.data)):
            raise InvalidInputError("non-finite depth value in grid")
        z0, z1 = self.z_domain
        slack = self.eps_merge
        if self.data[:, 0].min() < z0 - slack or self.data[:, 1].max() > z1 + slack:
            raise InvalidInputError("grid interval outside z_domain")

    def mirrored(self, axis: str) -> "DexelGrid":
        """Flip column order along x or y (geometry unchanged)."""
        idx = np.arange(self.nx * self.ny).reshape(self.ny, self.nx)
        idx = idx[:, ::-1] if axis == "x" else idx[::-1, :]
        return self.permuted(idx.ravel(), self.nx, self.ny)

    def transposed(self) -> "DexelGrid":
        """Swap the x and y lattice axes."""
        idx = np.arange(self.nx * self.ny).reshape(self.ny, self.nx).T
        g = self.permuted(idx.ravel(), self.ny, self.nx)
        return DexelGrid(self.ny, self.nx, (self.origin[1], self.origin[0]), self.spacing,
                         self.z_domain, g.ptr, g.data)

    def permuted(self, order: np.ndarray, nx: int, ny: int) -> "DexelGrid":
        counts = np.diff(self.ptr)[order]
        ptr = np.zeros(order.size + 1, np.int64)
        np.cumsum(counts, out=ptr[1:])
        rows = np.repeat(self.ptr[order] - ptr[:-1], counts) + np.arange(ptr[-1])
        return DexelGrid(nx, ny, self.origin, self.spacing, self.z_domain, ptr, self.data[rows])

    def __eq__(self, other):
        return (isinstance(other, DexelGrid) and self.nx == other.nx and self.ny == other.ny
                and self.origin == other.origin and self.spacing == other.spacing
                and self.z_domain == other.z_domain and np.array_equal(self.ptr, other.ptr)
                and np.array_equal(self.data, other.data))

    __hash__ = None


# grid-wide kernels ----------------------------------------------------------


@njit(cache=True, nogil=True)
def _grid_boolean(aptr, adata, bptr, bdata, op, eps):
    n = aptr.shape[0] - 1
    ptr = np.zeros(n + 1, np.int64)
    lo = np.empty(adata.shape[0] + bdata.shape[0] + 8, np.float64)
    hi = np.empty(lo.shape[0], np.float64)
    m = 0
    for c in range(n):
        a = adata[aptr[c]:aptr[c + 1]]
        b = bdata[bptr[c]:bptr[c + 1]]
        lo, hi, m = _ivl.boolean_into(a[:, 0].copy(), a[:, 1].copy(), b[:, 0].copy(), b[:, 1].copy(),
                                      op, eps, lo, hi, m)
        ptr[c + 1] = m
    out = np.empty((m, 2), np.float64)
    out[:, 0] = lo[:m]
    out[:, 1] = hi[:m]
    return ptr, out


@njit(cache=True, nogil=True)
def _grid_complement(aptr, adata, z0, z1, eps):
    n = aptr.shape[0] - 1
    ptr = np.zeros(n + 1, np.int64)
    lo = np.empty(adata.shape[0] + n + 8, np.float64)
    hi = np.empty(lo.shape[0], np.float64)
    dlo = np.array([z0])
    dhi = np.array([z1])
    m = 0
    for c in range(n):
        a = adata[aptr[c]:aptr[c + 1]]
        lo, hi, m = _ivl.boolean_into(dlo, dhi, a[:, 0].copy(), a[:, 1].copy(), _ivl.DIFFERENCE, eps, lo, hi, m)
        ptr[c + 1] = m
    out = np.empty((m, 2), np.float64)
    out[:, 0] = lo[:m]
    out[:, 1] = hi[:m]
    return ptr, out


@njit(cache=True, nogil=True)
def _grid_normalize(ptr, data, eps):
    n = ptr.shape[0] - 1
    optr = np.zeros(n + 1, np.int64)
    lo = np.empty(data.shape[0] + 8, np.float64)
    hi = np.empty(lo.shape[0], np.float64)
    m = 0
    for c in range(n):
        seg = data[ptr[c]:ptr[c + 1]]
        lo, hi, m = _ivl.normalize_into(seg[:, 0].copy(), seg[:, 1].copy(), seg.shape[0], eps, lo, hi, m)
        optr[c + 1] = m
    out = np.empty((m, 2), np.float64)
    out[:, 0] = lo[:m]
    out[:, 1] = hi[:m]
    return optr, out


def _require_compatible(a: DexelGrid, b: DexelGrid):
    if not a.same_geometry(b):
        raise IncompatibleGridsError(
            f"grid geometry mismatch: {a.nx}x{a.ny} @ {a.origin}/{a.spacing} z{a.z_domain} "
            f"vs {b.nx}x{b.ny} @ {b.origin}/{b.spacing} z{b.z_domain}")


def grid_boolean(a: DexelGrid, b: DexelGrid, op: str, eps_merge: float | None = None) -> DexelGrid:
    if op not in OPS:
        raise InvalidInputError(f"unknown boolean op {op!r}")
    _require_compatible(a, b)
    eps = a.eps_merge if eps_merge is None else eps_merge
    ptr, data = _grid_boolean(a.ptr, a.data, b.ptr, b.data, OPS[op], eps)
    return a.like(ptr, data)


def grid_complement(a: DexelGrid, eps_merge: float | None = None) -> DexelGrid:
    a.check_domain()
    eps = a.eps_merge if eps_merge is None else eps_merge
    ptr, data = _grid_complement(a.ptr, a.data, a.z_domain[0], a.z_domain[1], eps)
    return a.like(ptr, data)


def grid_normalize(a: DexelGrid, eps_merge: float | None = None) -> DexelGrid:
    eps = a.eps_merge if eps_merge is None else eps_merge
    ptr, data = _grid_normalize(a.ptr, a.data, eps)
    return a.like(ptr, data)


def pad_grid(a: DexelGrid, k: int, dz: float = 0.0) -> DexelGrid:
    """Add ``k`` empty columns on each lateral side and widen z_domain by ``dz``."""
    return embed_grid(a, a.nx + 2 * k, a.ny + 2 * k, -k, -k,
                      (a.z_domain[0] - dz, a.z_domain[1] + dz))


def embed_grid(a: DexelGrid, nx: int, ny: int, i0: int, j0: int, z_domain) -> DexelGrid:
    """Re-window ``a``: new column (i, j) is old column (i + i0, j + j0).

    Columns falling outside the old footprint are empty; intervals are
    clipped to the new ``z_domain``.
    """
    ii, jj = np.meshgrid(np.arange(nx) + i0, np.arange(ny) + j0)
    inside = (ii >= 0) & (ii < a.nx) & (jj >= 0) & (jj < a.ny)
    src = np.where(inside, jj * a.nx + ii, -1).ravel()
    counts = np.where(src >= 0, np.diff(a.ptr)[np.maximum(src, 0)], 0)
    ptr = np.zeros(src.size + 1, np.int64)
    np.cumsum(counts, out=ptr[1:])
    starts = a.ptr[np.maximum(src, 0)]
    rows = np.repeat(starts - ptr[:-1], counts) + np.arange(ptr[-1])
    data = a.data[rows].copy()
    origin = (a.origin[0] + i0 * a.spacing, a.origin[1] + j0 * a.spacing)
    g = DexelGrid(nx, ny, origin, a.spacing, tuple(map(float, z_domain)), ptr, data)
    z0, z1 = g.z_domain
    if data.size and (data[:, 0].min() < z0 or data[:, 1].max() > z1):
        np.clip(data, z0, z1, out=data)
        g = grid_normalize(g.like(ptr, data), a.eps_merge)
    return g


def offset_between(a: DexelGrid, b: DexelGrid) -> tuple[int, int]:
    """Integer column offset of ``b``'s origin relative to ``a``'s."""
    di = (b.origin[0] - a.origin[0]) / a.spacing
    dj = (b.origin[1] - a.origin[1]) / a.spacing
    ri, rj = round(di), round(dj)
    if abs(di - ri) > 1e-6 or abs(dj - rj) > 1e-6 or abs(a.spacing - b.spacing) > 1e-12 * a.spacing:
        raise IncompatibleGridsError("grids are not aligned on a common lattice")
    return int(ri), int(rj)


def align_to(a: DexelGrid, ref: DexelGrid) -> DexelGrid:
    """Express ``a`` on ``ref``'s footprint and z_domain (exact copy of geometry)."""
    i0, j0 = offset_between(a, ref)
    g = embed_grid(a, ref.nx, ref.ny, i0, j0, ref.z_domain)
    return DexelGrid(ref.nx, ref.ny, ref.origin, ref.spacing, ref.z_domain, g.ptr, g.data)


def grids_equal(a: DexelGrid, b: DexelGrid, eps: float) -> tuple[bool, tuple[int, int] | None]:
    """Interval-wise comparison; returns (equal, first differing column)."""
    _require_compatible(a, b)
    ca, cb = np.diff(a.ptr), np.diff(b.ptr)
    bad = ca != cb
    if a.data.shape == b.data.shape and a.data.size:
        diff = np.abs(a.data - b.data).max(axis=1) > eps
        if not bad.any() and diff.any():
            col = np.searchsorted(a.ptr, np.argmax(diff), side="right") - 1
            bad[col] = True
    elif not bad.any() and a.data.shape != b.data.shape:
        bad[:] = True
    if bad.any():
        c = int(np.argmax(bad))
        return False, (c % a.nx, c // a.nx)
    return True, None
