import numpy as np
import pytest

from dexelmorph.dexel import DexelGrid


def random_grid(rng, max_side=32, max_k=3, z_max=20.0, spacing=1.0):
    """Grid of up to ``max_side``² columns with 0..max_k sorted intervals each."""
    nx, ny = (int(v) for v in rng.integers(1, max_side + 1, 2))
    cols = []
    for _ in range(nx):
        row = []
        for _ in range(ny):
            k = int(rng.integers(0, max_k + 1))
            z = np.sort(rng.uniform(0, z_max, 2 * k))
            row.append([(z[2 * t], z[2 * t + 1]) for t in range(k) if z[2 * t + 1] > z[2 * t]])
        cols.append(row)
    g = DexelGrid.empty(nx, ny, spacing=spacing, z_domain=(0.0, z_max))
    flat = [cols[i][j] for j in range(ny) for i in range(nx)]
    # sorted draws are already normalized unless two of them nearly touch
    if all(b[0] - a[1] > g.eps_merge for col in flat for a, b in zip(col, col[1:])):
        return g.with_columns(flat)
    return DexelGrid.from_columns(cols, spacing=spacing, z_domain=(0.0, z_max))


def random_rows(rng, n_rows=None, max_k=8, z_max=30.0):
    """A 2D slice: rows of sorted disjoint (z_in, z_out) pairs."""
    n_rows = n_rows or int(rng.integers(1, 65))
    rows = []
    for _ in range(n_rows):
        k = int(rng.integers(0, max_k + 1)) if rng.random() < 0.6 else 0
        z = np.sort(rng.uniform(0, z_max, 2 * k))
        rows.append([(float(z[2 * t]), float(z[2 * t + 1])) for t in range(k) if z[2 * t + 1] > z[2 * t]])
    return rows


def contains(big: DexelGrid, small: DexelGrid) -> bool:
    """Pointwise ``small ⊆ big`` on grids of identical geometry."""
    from dexelmorph.dexel import grid_boolean

    return grid_boolean(small, big, "difference").n_segments == 0


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
