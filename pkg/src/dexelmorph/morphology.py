"""Opening, closing and shells built from exact dilation and erosion.

Opening and closing never leave the input's footprint: anything the
intermediate dilation adds outside it is removed again by the matching
erosion.  They are computed on the padded footprint and clipped back once.
A shell keeps the footprint of its outer dilation.
"""

from __future__ import annotations

from .dexel import DexelGrid, align_to, grid_boolean
from .errors import InvalidInputError
from .offset3d import dilate_grid, erode_grid


def open_grid(grid: DexelGrid, r: float, threads=None, engine="sweep") -> DexelGrid:
    """Dilation of the erosion: removes features thinner than ``2 r``."""
    eroded = erode_grid(grid, r, threads, engine, grid.eps_merge)
    return align_to(dilate_grid(eroded, r, threads, engine, grid.eps_merge), grid)


def close_grid(grid: DexelGrid, r: float, threads=None, engine="sweep") -> DexelGrid:
    """Erosion of the dilation: fills gaps and handles narrower than ``2 r``."""
    grown = dilate_grid(grid, r, threads, engine, grid.eps_merge)
    return align_to(erode_grid(grown, r, threads, engine, grid.eps_merge), grid)


def shell_grid(grid: DexelGrid, r_out: float, r_in: float, threads=None, engine="sweep") -> DexelGrid:
    """``dilate(S, r_out)`` minus ``erode(S, r_in)``; with ``r_out = 0`` a hollowed solid."""
    for name, v in (("r_out", r_out), ("r_in", r_in)):
        if not (v == v and v >= 0):
            raise InvalidInputError(f"{name} must be >= 0, got {v}")
    outer = dilate_grid(grid, r_out, threads, engine, grid.eps_merge)
    inner = erode_grid(grid, r_in, threads, engine, grid.eps_merge)
    return grid_boolean(outer, align_to(inner, outer), "difference", grid.eps_merge)
