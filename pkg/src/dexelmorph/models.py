"""Procedural test solids at a requested lattice resolution.

``sphere`` and ``torus_knot`` are dexelized triangle meshes.  The perforated
plate and the union of boxes are evaluated per ray in closed form, which is
exact and avoids mesh booleans.
"""

from __future__ import annotations

import math

import numpy as np

from .dexel import DexelGrid, GridConfig, grid_normalize
from .errors import InvalidInputError
from .mesh import dexelize, icosphere, torus_knot_mesh


def _from_pieces(nx, ny, origin, s, zdom, col, lo, hi) -> DexelGrid:
    order = np.lexsort((lo, col))
    col, lo, hi = col[order], lo[order], hi[order]
    ptr = np.zeros(nx * ny + 1, np.int64)
    np.cumsum(np.bincount(col, minlength=nx * ny), out=ptr[1:])
    g = DexelGrid(nx, ny, origin, s, zdom, ptr, np.stack([lo, hi], axis=1))
    return grid_normalize(g)


def _lattice(extent, size):
    s = max(extent) / size
    nx = max(1, math.ceil(extent[0] / s - 1e-9))
    ny = max(1, math.ceil(extent[1] / s - 1e-9))
    x = (np.arange(nx) + 0.5) * s
    y = (np.arange(ny) + 0.5) * s
    X, Y = np.meshgrid(x, y)  # row j, column i
    return s, nx, ny, X.ravel(), Y.ravel()


def sphere(size: int) -> DexelGrid:
    return dexelize(icosphere(4), GridConfig(resolution=size, padding=0.05))


def torus_knot(size: int) -> DexelGrid:
    return dexelize(torus_knot_mesh(), GridConfig(resolution=size, padding=0.1))


def perforated_plate(size: int) -> DexelGrid:
    """A 4 x 4 x 1 slab with a 5 x 5 array of vertical holes and one buried channel along x."""
    ext = (4.0, 4.0, 1.0)
    s, nx, ny, X, Y = _lattice(ext, size)
    cx = (np.arange(5) + 0.5) * 0.8
    hx = np.abs(X[:, None] - cx[None, :]).min(axis=1)
    hy = np.abs(Y[:, None] - cx[None, :]).min(axis=1)
    solid = hx ** 2 + hy ** 2 > 0.22 ** 2
    cols = np.flatnonzero(solid)
    # channel of radius 0.2 along x at y = 2, z = 0.5 splits the columns above it
    dy = Y[cols] - 2.0
    cut = np.abs(dy) < 0.2
    half = np.sqrt(np.maximum(0.2 ** 2 - dy ** 2, 0.0))
    lo = [np.zeros(cols.size), np.where(cut, 0.5 + half, 0.0)]
    hi = [np.where(cut, 0.5 - half, 1.0), np.ones(cols.size)]
    keep2 = cut
    col = np.concatenate([cols, cols[keep2]])
    zlo = np.concatenate([lo[0], lo[1][keep2]])
    zhi = np.concatenate([hi[0], hi[1][keep2]])
    return _from_pieces(nx, ny, (0.0, 0.0), s, (0.0, 1.0), col, zlo, zhi)


def box_union(size: int, count: int = 24, seed: int = 7) -> DexelGrid:
    """Union of axis-aligned boxes drawn from a fixed random stream."""
    rng = np.random.default_rng(seed)
    ext = (4.0, 4.0, 4.0)
    s, nx, ny, X, Y = _lattice(ext, size)
    cols, los, his = [], [], []
    for _ in range(count):
        c = rng.uniform(0.5, 3.5, 3)
        h = rng.uniform(0.15, 0.6, 3)
        inside = np.flatnonzero((np.abs(X - c[0]) <= h[0]) & (np.abs(Y - c[1]) <= h[1]))
        cols.append(inside)
        los.append(np.full(inside.size, c[2] - h[2]))
        his.append(np.full(inside.size, c[2] + h[2]))
    return _from_pieces(nx, ny, (0.0, 0.0), s, (0.0, 4.0),
                        np.concatenate(cols), np.concatenate(los), np.concatenate(his))


MODELS = {
    "sphere": sphere,
    "torus_knot": torus_knot,
    "perforated_plate": perforated_plate,
    "box_union": box_union,
}


def model_grid(name: str, size: int) -> DexelGrid:
    try:
        build = MODELS[name]
    except KeyError:
        raise InvalidInputError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return build(size)


def solid_box(n: int, spacing: float = 1.0, pad: int = 0) -> DexelGrid:
    """An ``n``-dexel cube: columns ``pad..pad+n-1`` filled over ``[0, n * spacing]``."""
    m = n + 2 * pad
    cols = [[[(0.0, n * spacing)] if pad <= i < pad + n and pad <= j < pad + n else [] for j in range(m)]
            for i in range(m)]
    return DexelGrid.from_columns(cols, spacing=spacing, z_domain=(-pad * spacing, (n + pad) * spacing))
