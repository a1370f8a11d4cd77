"""Exact morphological offsets on dexel grids."""

from .dexel import (DexelGrid, GridConfig, Interval, align_to, complement_column, column_boolean,
                    grid_boolean, grid_complement, grid_normalize, grids_equal, normalize_column, pad_grid)
from .errors import (DexelError, IncompatibleGridsError, InvalidInputError, MeshFormatError,
                     NonWatertightError)
from .io import load, save
from .mesh import TriangleMesh, dexelize, load_mesh
from .morphology import close_grid, open_grid, shell_grid
from .offset3d import dilate_grid, erode_grid, radius_transfer
from .oracle import brute_dilate_2d, brute_dilate_3d
from .sweep_power import WeightedPoint, power_dilate_2d, power_vertex, power_vertex_is_removal
from .sweep_voronoi import (SeedSegment, SweepState, WeightedSegment, dilate_slice, half_sweep,
                            voronoi_vertex_points, voronoi_vertex_segment_points)

__all__ = [
    "DexelGrid", "GridConfig", "Interval", "align_to", "complement_column", "column_boolean",
    "grid_boolean", "grid_complement", "grid_normalize", "grids_equal", "normalize_column", "pad_grid",
    "DexelError", "IncompatibleGridsError", "InvalidInputError", "MeshFormatError", "NonWatertightError",
    "load", "save", "TriangleMesh", "dexelize", "load_mesh", "close_grid", "open_grid", "shell_grid",
    "dilate_grid", "erode_grid", "radius_transfer", "brute_dilate_2d", "brute_dilate_3d",
    "WeightedPoint", "power_dilate_2d", "power_vertex", "power_vertex_is_removal",
    "SeedSegment", "SweepState", "WeightedSegment", "dilate_slice", "half_sweep",
    "voronoi_vertex_points", "voronoi_vertex_segment_points",
]
