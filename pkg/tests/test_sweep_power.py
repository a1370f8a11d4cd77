import math

import numpy as np
import pytest

from dexelmorph.errors import InvalidInputError
from dexelmorph.oracle import brute_dilate_2d
from dexelmorph.sweep_power import (WeightedPoint, box_dilate, point_power_half_sweep, power_dilate_2d,
                                    power_distance, power_vertex, power_vertex_is_removal)
from dexelmorph.sweep_voronoi import WeightedSegment


def _close(a, b, eps):
    return len(a) == len(b) and all(abs(x[0] - y[0]) <= eps and abs(x[1] - y[1]) <= eps for x, y in zip(a, b))


def _rows_of(n, placed):
    rows = [[] for _ in range(n)]
    for k, seg in placed:
        rows[k].append(WeightedSegment(k, *seg))
    return rows


def _random_weighted(rng, n_rows=None, max_k=6, r_max=10.0):
    n_rows = n_rows or int(rng.integers(1, 49))
    rows = []
    for k in range(n_rows):
        m = int(rng.integers(0, max_k + 1)) if rng.random() < 0.5 else 0
        z = np.sort(rng.uniform(0, 40, 2 * m))
        row = []
        for t in range(m):
            if z[2 * t + 1] > z[2 * t]:
                rad = 0.0 if rng.random() < 0.1 else float(rng.uniform(0, r_max))
                row.append(WeightedSegment(k, float(z[2 * t]), float(z[2 * t + 1]), rad))
        rows.append(row)
    return rows


def _points_to_pieces(rows):
    return [[WeightedSegment(k, p.z, p.z, p.radius) for p in row] for k, row in enumerate(rows)]


# capsule dilation -------------------------------------------------------------------


def test_single_capsule():
    out = power_dilate_2d(_rows_of(3, [(1, (0, 2, 1.0))]))
    assert out == [[(0, 2)], [(-1, 3)], [(0, 2)]]


def test_zero_radii_identity():
    rows = _rows_of(3, [(0, (0, 1, 0.0)), (0, (2, 3, 0.0)), (2, (1, 5, 0.0))])
    assert power_dilate_2d(rows) == [[(0, 1), (2, 3)], [], [(1, 5)]]


def test_overlapping_capsules():
    rows = _rows_of(6, [(1, (0, 2, 2.0)), (3, (1, 4, 1.5)), (4, (6, 7, 2.5))])
    assert power_dilate_2d(rows) == brute_dilate_2d(rows)


def test_box_reach():
    out = box_dilate(_rows_of(7, [(3, (0, 1, 2.5))]))
    assert out == [[], [(0, 1)], [(0, 1)], [(0, 1)], [(0, 1)], [(0, 1)], []]


def test_box_larger_radius_wins():
    # the r=3 seed alone reaches rows 1 and 7
    out = box_dilate(_rows_of(9, [(3, (0, 1, 1.0)), (4, (0, 1, 3.0))]))
    assert [bool(r) for r in out] == [False, True, True, True, True, True, True, True, False]


def test_box_zero_radius():
    assert box_dilate(_rows_of(3, [(1, (0, 1, 0.0))])) == [[], [(0, 1)], []]


def test_single_point_chord():
    out = point_power_half_sweep([[WeightedPoint(0, 0, 2)], [], []], "forward")
    s3 = math.sqrt(3)
    assert out[0] == [(-2, 2)]
    assert _close(out[1], [(-s3, s3)], 1e-15)
    assert out[2] == []  # tangent row


def test_point_sweep_is_one_sided():
    rows = [[], [WeightedPoint(1, 0, 1.5)], []]
    assert point_power_half_sweep(rows, "forward")[0] == []
    assert point_power_half_sweep(rows, "backward")[2] == []
    with pytest.raises(InvalidInputError):
        point_power_half_sweep(rows, "sideways")


def _point_union(rows, eps):
    fwd = point_power_half_sweep(rows, "forward", eps_merge=eps)
    bwd = point_power_half_sweep(rows, "backward", eps_merge=eps)
    return [sorted(a + b) for a, b in zip(fwd, bwd)]


def _merged(rows, eps):
    from dexelmorph.dexel import normalize_column

    return [normalize_column(r, eps) for r in rows]


def test_equal_radii_reduce_to_voronoi():
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = int(rng.integers(1, 30))
        rows = [[WeightedPoint(k, float(z), 3.0) for z in rng.uniform(0, 20, rng.integers(0, 4))]
                if rng.random() < 0.4 else [] for k in range(n)]
        got = _merged(_point_union(rows, 0.0), 0.0)
        want = brute_dilate_2d([[(p.z, p.z) for p in row] for row in rows], 3.0)
        assert got == want


def test_random_point_sets():
    rng = np.random.default_rng(22)
    for _ in range(100):
        n = 24
        rows = [[] for _ in range(n)]
        for _ in range(50):
            k = int(rng.integers(0, n))
            rows[k].append(WeightedPoint(k, float(rng.uniform(0, 30)), float(rng.uniform(0, 8))))
        eps = 1e-9 * 50
        got = _merged(_point_union(rows, eps), eps)
        # coincident depths on a row keep the larger disk, as the sweep does
        want = brute_dilate_2d(_points_to_pieces(rows), eps_merge=eps)
        assert all(_close(a, b, eps) for a, b in zip(got, want))


def test_random_weighted_slices():
    rng = np.random.default_rng(23)
    for _ in range(500):
        rows = _random_weighted(rng)
        eps = 1e-9 * 100
        got = power_dilate_2d(rows, eps_merge=eps)
        want = brute_dilate_2d(rows, eps_merge=eps)
        assert all(_close(a, b, eps) for a, b in zip(got, want)), rows


def test_capsules_covered():
    rng = np.random.default_rng(24)
    for _ in range(50):
        rows = _random_weighted(rng, n_rows=20)
        out = power_dilate_2d(rows)
        for k, row in enumerate(rows):
            for seg in row:
                for t in range(len(rows)):
                    d = abs(t - k)
                    if d <= seg.radius:
                        h = math.sqrt(seg.radius ** 2 - d * d)
                        lo, hi = seg.z_in - h, seg.z_out + h
                        assert any(a <= lo + 1e-12 and hi - 1e-12 <= b for a, b in out[t])


def test_spacing():
    rows = _rows_of(5, [(2, (0, 1, 1.0))])
    out = power_dilate_2d(rows, spacing=0.5)
    h = math.sqrt(0.75)
    assert _close(out[1], [(-h, 1 + h)], 1e-15) and out[0] == [(0, 1)]


# power vertices ---------------------------------------------------------------------


def test_power_vertex_examples():
    assert power_vertex((0, 0, 1), (2, 0, 1), (1, 1, 1)) == pytest.approx((1, 0))
    v = power_vertex((0, 0, 1), (2, 0, 0), (1, 1, 0))
    assert v == pytest.approx((1.25, 0.25))
    for p in ((0, 0, 1), (2, 0, 0), (1, 1, 0)):
        assert power_distance(v, WeightedPoint(*p)) == pytest.approx(0.625)
    assert power_vertex((0, 0, 1), (1, 1, 2), (2, 2, 0.5)) is None


def test_power_vertex_random():
    rng = np.random.default_rng(25)
    for _ in range(1000):
        pts = [WeightedPoint(*rng.uniform(-10, 10, 2), rng.uniform(0, 5)) for _ in range(3)]
        v = power_vertex(*pts)
        if v is None:
            continue
        pw = [power_distance(v, p) for p in pts]
        scale = max(1.0, *(abs(c) for c in v), *(abs(c) for p in pts for c in p))
        assert max(pw) - min(pw) < 1e-7 * scale ** 2


def _middle_owns_some_row(left, middle, right, x_from, x_to):
    """Sampling oracle: does ``middle`` beat both others somewhere on a row in (x_from, x_to]?

    Power-distance differences are linear in z on a fixed row, so each row is
    decided by intersecting two half-lines.
    """
    for x in np.linspace(x_from, x_to, 400)[1:]:
        lo, hi = -math.inf, math.inf
        for p in (left, right):
            # pw(middle) - pw(p) = alpha + beta * z
            alpha = ((x - middle.x) ** 2 + middle.z ** 2 - middle.radius ** 2
                     - (x - p.x) ** 2 - p.z ** 2 + p.radius ** 2)
            beta = 2.0 * (p.z - middle.z)
            if beta > 0:
                hi = min(hi, -alpha / beta)
            elif beta < 0:
                lo = max(lo, -alpha / beta)
            elif alpha >= 0:
                lo, hi = math.inf, -math.inf
        if hi - lo > 1e-9 * max(1.0, abs(x)):
            return True
    return False


def test_removal_symmetric_triple():
    a, b, c = WeightedPoint(1, -1, 1), WeightedPoint(0, 0, 1), WeightedPoint(1, 1, 1)
    v = power_vertex(a, b, c)
    assert power_vertex_is_removal(a, b, c, v)
    assert not _middle_owns_some_row(a, b, c, v[0], v[0] + 50)


def test_removal_large_middle_persists():
    # a newer wide disk between two older small ones keeps its cell
    a, b, c = WeightedPoint(0, -1, 0.2), WeightedPoint(1, 0, 2.0), WeightedPoint(0, 1, 0.2)
    v = power_vertex(a, b, c)
    assert v is not None
    assert not power_vertex_is_removal(a, b, c, v)
    assert _middle_owns_some_row(a, b, c, v[0], v[0] + 50)


def test_removal_dominated_duplicate():
    a, b, c = WeightedPoint(0, 0, 1), WeightedPoint(0, 0, 0.5), WeightedPoint(0, 2, 1)
    assert power_vertex_is_removal(a, b, c)
    assert not _middle_owns_some_row(a, b, c, -1, 50)


def test_removal_random_against_sampling():
    rng = np.random.default_rng(26)
    checked = 0
    for _ in range(200):
        a, b, c = sorted((WeightedPoint(float(rng.integers(0, 6)), float(rng.uniform(-5, 5)),
                                        float(rng.uniform(0, 3))) for _ in range(3)), key=lambda p: p.z)
        if not a.z < c.z:
            continue
        if power_vertex_is_removal(a, b, c):
            # once removed, never the nearest again from some row on
            assert not _middle_owns_some_row(a, b, c, 60, 200)
        else:
            assert _middle_owns_some_row(a, b, c, 60, 400)
        checked += 1
    assert checked > 150


def test_removal_needs_depth_order():
    with pytest.raises(InvalidInputError):
        power_vertex_is_removal((0, 1, 1), (0, 0, 1), (0, 2, 1))
