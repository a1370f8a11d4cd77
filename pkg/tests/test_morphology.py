import numpy as np
import pytest

from dexelmorph.dexel import DexelGrid, align_to, grids_equal
from dexelmorph.errors import InvalidInputError
from dexelmorph.models import solid_box
from dexelmorph.morphology import close_grid, open_grid, shell_grid

from conftest import contains, random_grid


def test_open_cube():
    g = solid_box(6, pad=2)
    o = open_grid(g, 1.5, threads=1)
    assert o.nx == g.nx and o.origin == g.origin
    assert contains(g, o)
    # columns at least r from the sides keep their full height
    for i in range(4, 6):
        for j in range(4, 6):
            assert o.column(i, j) == [(0.0, 6.0)]
    assert o.column(2, 2) != g.column(2, 2)  # the corner is rounded


def test_close_bridges_gap():
    cols = [[[(0.0, 4.0)] if i < 4 or i >= 6 else [] for _ in range(4)] for i in range(10)]
    g = DexelGrid.from_columns(cols, z_domain=(0.0, 4.0))
    c = close_grid(g, 1.5, threads=1)
    assert contains(c, g)
    assert c.column(4, 1) and c.column(5, 2)


@pytest.mark.parametrize("op", [open_grid, close_grid])
def test_zero_radius(rng, op):
    g = random_grid(rng, 10)
    assert op(g, 0.0, 1) == g


def test_shell_crust():
    g = solid_box(6, pad=1)
    s = shell_grid(g, 0.0, 1.0, threads=1)
    for (i, j), col in s.columns():
        inner = 2 <= i <= 5 and 2 <= j <= 5
        rim = (1 <= i <= 6 and 1 <= j <= 6) and not inner
        if inner:
            assert col == [(0.0, 1.0), (5.0, 6.0)]
        elif rim:
            assert col == [(0.0, 6.0)]
        else:
            assert col == []


def test_shell_trivial_cases(rng):
    empty = DexelGrid.empty(5, 5, z_domain=(0.0, 3.0))
    assert shell_grid(empty, 1.0, 1.0, 1).n_segments == 0
    g = random_grid(rng, 10)
    assert shell_grid(g, 0.0, 0.0, 1).n_segments == 0
    with pytest.raises(InvalidInputError):
        shell_grid(g, -1.0, 0.0)


def test_shell_covers_boundary_columns():
    rng = np.random.default_rng(41)
    for _ in range(20):
        g = random_grid(rng, 14)
        r = float(rng.uniform(0.5, 3))
        s = align_to(shell_grid(g, r, r, 1), g)
        occ = (np.diff(g.ptr) > 0).reshape(g.ny, g.nx)
        padded = np.pad(occ, 1)
        lonely = occ & ~(padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:])
        for j, i in zip(*np.nonzero(lonely)):
            assert s.column(i, j)


def test_containment_and_idempotence():
    rng = np.random.default_rng(42)
    for _ in range(40):
        g = random_grid(rng, 16)
        r = float(rng.uniform(0, 4))
        o = open_grid(g, r, 1)
        c = close_grid(g, r, 1)
        assert contains(g, o) and contains(c, g)
        # (z + h) - h may land one ulp off z, so compare within the merge tolerance
        assert grids_equal(open_grid(o, r, 1), o, g.eps_merge)[0]
        assert grids_equal(close_grid(c, r, 1), c, g.eps_merge)[0]
