"""Acceptance checks, one per criterion.

Each test prints a single ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line straight to the terminal, then asserts.  The timing criteria share one
set of benchmark runs (see the session fixtures), so the whole module takes
ten minutes or more on a single core.
"""

import math
import os
import time

import numpy as np
import pytest

from dexelmorph import bench, io
from dexelmorph.cli import main
from dexelmorph.dexel import align_to, grid_complement, grids_equal, pad_grid
from dexelmorph.offset3d import dilate_grid, erode_grid
from dexelmorph.morphology import close_grid, open_grid
from dexelmorph.sweep_power import WeightedPoint, power_distance, power_vertex
from dexelmorph.sweep_voronoi import (SeedSegment, distance_to_segment, voronoi_vertex_points,
                                      voronoi_vertex_segment_points)

from conftest import contains, random_grid

SUITE_SEED = 20240611


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def random_suite(count, seed=SUITE_SEED):
    """Grids up to 32², up to 3 intervals per column, radius up to 6 dexels.

    Built up front by the callers so the timed part covers the checks only.
    """
    rng = np.random.default_rng(seed)
    for _ in range(count):
        g = random_grid(rng, 32, 3)
        yield g, float(rng.uniform(0, 6)) * g.spacing


# 1 -------------------------------------------------------------------------


def test_criterion_1_oracle_exactness(tmp_path, capsys):
    suite = list(random_suite(500))
    t0 = time.perf_counter()
    bad = []
    src, a, b = (str(tmp_path / f) for f in ("g.dxl", "sweep.dxl", "brute.dxl"))
    for k, (g, r) in enumerate(suite):
        io.save(g, src)
        for engine, out in (("sweep", a), ("brute", b)):
            if main(["dilate", src, "-o", out, "--radius", repr(r / g.spacing), "--radius-unit", "dexel",
                     "--engine", engine]) != 0:
                bad.append((k, engine))
        if main(["compare", a, b]) != 0:
            bad.append((k, "differ"))
    secs = time.perf_counter() - t0
    report(capsys, 1, not bad and secs < 120,
           f"500 random grids, sweep vs brute via the CLI: {500 - len(bad)} equal within eps_merge, {secs:.1f} s")


# 2 -------------------------------------------------------------------------


def _cells_may_vanish(fns, y0, y1, z0, z1):
    """Per cell: can every function reach zero inside it?

    Each function is evaluated at the corners and at the two y-edges at its
    own depth ``zs`` (the argmin for the parabola, harmless for planes).
    """
    ok = np.ones(y0.shape, bool)
    for g, zs in fns:
        zc = np.clip(zs, z0, z1)
        v = np.stack([g(y0, z0), g(y0, z1), g(y1, z0), g(y1, z1), g(y0, zc), g(y1, zc)])
        ok &= (v.min(axis=0) <= 0) & (v.max(axis=0) >= 0)
    return ok


def grid_oracle_finds_vertex(fns, box, tol, cells=32, budget=200_000):
    """Dense-grid search for a common zero of ``fns`` inside ``box``.

    Starts from ``cells``² cells (about 10³) and refines only the cells where
    all functions can vanish.  Returns True (zero found to within ``tol``),
    False (none in the box) or None when the budget runs out.
    """
    ylo, yhi, zlo, zhi = box
    ey = np.linspace(ylo, yhi, cells + 1)
    ez = np.linspace(zlo, zhi, cells + 1)
    Y0, Z0 = np.meshgrid(ey[:-1], ez[:-1], indexing="ij")
    Y1, Z1 = np.meshgrid(ey[1:], ez[1:], indexing="ij")
    y0, y1, z0, z1 = (a.ravel() for a in (Y0, Y1, Z0, Z1))
    spent = 0
    while y0.size:
        spent += y0.size
        if spent > budget:
            return None
        keep = _cells_may_vanish(fns, y0, y1, z0, z1)
        y0, y1, z0, z1 = y0[keep], y1[keep], z0[keep], z1[keep]
        if y0.size and max((y1 - y0).max(), (z1 - z0).max()) < tol:
            return True
        ym, zm = (y0 + y1) / 2, (z0 + z1) / 2
        y0, y1 = np.concatenate([y0, y0, ym, ym]), np.concatenate([ym, ym, y1, y1])
        z0, z1 = np.concatenate([z0, zm, z0, zm]), np.concatenate([zm, z1, zm, z1])
    return False


def _box(points):
    pts = np.asarray(points, float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = max(float((hi - lo).max()), 1.0)
    return lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad


def _plane(p, q, wp=0.0, wq=0.0):
    """``|x - p|² - wp - (|x - q|² - wq)`` as a vectorized function."""
    return (lambda y, z: (y - p[0]) ** 2 + (z - p[1]) ** 2 - wp - (y - q[0]) ** 2 - (z - q[1]) ** 2 + wq,
            0.0)


def _triples(rng, n, degenerate_every=5):
    """Uniform triples with every fifth one exactly collinear on integers."""
    for k in range(n):
        if k % degenerate_every == 0:
            o, d = rng.integers(-5, 6, 2), np.zeros(2, int)
            while not d.any():  # three coincident sites tie everywhere
                d = rng.integers(-3, 4, 2)
            yield [tuple(map(float, o + t * d)) for t in rng.permutation(3)]
        else:
            yield [tuple(rng.uniform(-10, 10, 2)) for _ in range(3)]


def _rel(values, scale):
    return (max(values) - min(values)) / max(scale, 1e-300)


def test_criterion_2_vertex_algebra(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SUITE_SEED)
    stats = {}

    def check_none(kind, fns, box):
        found = grid_oracle_finds_vertex(fns, box, 1e-9 * (box[1] - box[0]))
        stats[kind]["none"] += 1
        if found is not False:
            stats[kind]["bad"] += 1

    # Voronoi, three points
    stats["points"] = dict(vertex=0, none=0, bad=0)
    for p1, p2, p3 in _triples(rng, 10_000):
        v = voronoi_vertex_points(p1, p2, p3)
        if v is None:
            check_none("points", [_plane(p1, p2), _plane(p2, p3)], _box([p1, p2, p3]))
            continue
        d = [math.dist(v, p) for p in (p1, p2, p3)]
        stats["points"]["vertex"] += 1
        stats["points"]["bad"] += _rel(d, max(d)) > 1e-7

    # Voronoi, point / segment interior / point
    stats["segments"] = dict(vertex=0, none=0, bad=0)
    for _ in range(10_000):
        p1, p2 = tuple(rng.uniform(-10, 10, 2)), tuple(rng.uniform(-10, 10, 2))
        za, zb = np.sort(rng.uniform(-10, 10, 2))
        s = SeedSegment(float(rng.uniform(-10, 10)), float(za), float(zb))
        v = voronoi_vertex_segment_points(p1, s, p2)
        if v is None:
            parabola = (lambda y, z, p=p1, ys=s.y: (y - p[0]) ** 2 + (z - p[1]) ** 2 - (y - ys) ** 2, p1[1])
            ylo, yhi, _, _ = _box([p1, p2, (s.y, s.z_in), (s.y, s.z_out)])
            check_none("segments", [parabola, _plane(p1, p2)], (ylo, yhi, s.z_in, s.z_out))
            continue
        d = [math.dist(v, p1), math.dist(v, p2), distance_to_segment(v, s)]
        stats["segments"]["vertex"] += 1
        stats["segments"]["bad"] += _rel(d, max(d)) > 1e-7 or not s.z_in <= v[1] <= s.z_out

    # power vertices
    stats["power"] = dict(vertex=0, none=0, bad=0)
    for tri in _triples(rng, 10_000):
        pts = [WeightedPoint(y, z, float(rng.uniform(0, 5))) for y, z in tri]
        v = power_vertex(*pts)
        if v is None:
            a, b, c = pts
            fns = [_plane(a[:2], b[:2], a.radius ** 2, b.radius ** 2),
                   _plane(b[:2], c[:2], b.radius ** 2, c.radius ** 2)]
            check_none("power", fns, _box([p[:2] for p in pts]))
            continue
        pw = [power_distance(v, p) for p in pts]
        scale = max(math.dist(v, p[:2]) ** 2 + p.radius ** 2 for p in pts)
        stats["power"]["vertex"] += 1
        stats["power"]["bad"] += _rel(pw, scale) > 1e-7

    secs = time.perf_counter() - t0
    bad = sum(s["bad"] for s in stats.values())
    parts = ", ".join(f"{k} {s['vertex']} vertices + {s['none']} none" for k, s in stats.items())
    report(capsys, 2, bad == 0 and secs < 60, f"{parts}; {bad} failures, {secs:.1f} s")


# 3 -------------------------------------------------------------------------


def _erode_by_formula(g, r):
    k = math.ceil(r / g.spacing)
    window = pad_grid(g, k, r)
    grown = dilate_grid(grid_complement(window), r, 1, "sweep", g.eps_merge)
    return align_to(grid_complement(align_to(grown, window)), g)


def test_criterion_3_duality_and_monotonicity(capsys):
    suite = list(random_suite(500, SUITE_SEED + 3))
    t0 = time.perf_counter()
    fails = {"duality": 0, "extensive": 0, "monotone": 0, "sandwich": 0, "idempotent": 0}
    bitwise_idem = 0
    n = 0
    for g, r in suite:
        n += 1
        eps = g.eps_merge
        e = erode_grid(g, r, 1)
        fails["duality"] += io.dumps(e) != io.dumps(_erode_by_formula(g, r))
        d = dilate_grid(g, r, 1)
        d2 = dilate_grid(g, r + 1.0, 1)
        fails["extensive"] += not contains(d, align_to(g, d))
        fails["monotone"] += not (contains(d2, align_to(d, d2)) and contains(e, erode_grid(g, r + 1.0, 1)))
        o, c = open_grid(g, r, 1), close_grid(g, r, 1)
        fails["sandwich"] += not (contains(g, o) and contains(c, g))
        oo, cc = open_grid(o, r, 1), close_grid(c, r, 1)
        fails["idempotent"] += not (grids_equal(oo, o, eps)[0] and grids_equal(cc, c, eps)[0])
        bitwise_idem += oo == o and cc == c
    secs = time.perf_counter() - t0
    total = sum(fails.values())
    detail = (f"{n} random grids: " + ", ".join(f"{k} {n - v}/{n}" for k, v in fails.items())
              + f" (idempotence bit-identical on {bitwise_idem}/{n}, rest within eps_merge), {secs:.1f} s")
    report(capsys, 3, total == 0 and secs < 60, detail)


# timing suites ---------------------------------------------------------------


@pytest.fixture(scope="session")
def default_suite():
    """Sizes 64 to 256, both engines, dilation and erosion."""
    return bench.run_suite(sizes=(64, 128, 256), radii=(0.05,), threads=(1,), engines=("sweep", "brute"),
                           ops=("dilate", "erode"))


@pytest.fixture(scope="session")
def large_suite():
    """Sweep dilation at 512 on 1, 2 and 4 threads."""
    return bench.run_suite(sizes=(512,), radii=(0.05,), threads=(1, 2, 4), engines=("sweep",),
                           ops=("dilate",))


def test_criterion_4_scaling_slope(default_suite, large_suite, capsys):
    recs = [r for r in default_suite + large_suite
            if r.op == "dilate" and r.engine == "sweep" and r.threads == 1]
    per_model = {k[0]: v for k, v in bench.scaling_slopes(recs).items()}
    pooled = bench.pooled_slope(recs)
    ok = 2.5 <= pooled <= 3.5 and all(2.5 <= v <= 3.5 for v in per_model.values())
    slopes = ", ".join(f"{k} {v:.2f}" for k, v in per_model.items())
    report(capsys, 4, ok, f"sweep dilation 64..512 at 0.05: pooled slope {pooled:.2f}; per model {slopes}")


def test_criterion_5_thread_scaling(large_suite, capsys):
    t = {}
    for r in large_suite:
        t.setdefault(r.model, {})[r.threads] = r.seconds
    worst = min(t1[1] / t1[n] / n for t1 in t.values() for n in (2, 4))
    cells = "; ".join(f"{m} " + " ".join(f"{n}t {v[1] / v[n]:.2f}x" for n in (2, 4)) for m, v in t.items())
    cores = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    report(capsys, 5, worst >= 0.6,
           f"speedup at 512 ({cores} core(s) available): {cells}; worst efficiency {worst:.2f} (need 0.6)")


def test_criterion_6_erosion_cheaper(default_suite, capsys):
    t = {(r.model, r.size, r.op): r.seconds for r in default_suite if r.engine == "sweep"}
    cases = sorted({(m, s) for m, s, _ in t})
    wins = [c for c in cases if t[(*c, "erode")] <= t[(*c, "dilate")]]
    ratios = ", ".join(f"{m}@{s} {t[(m, s, 'erode')] / t[(m, s, 'dilate')]:.2f}" for m, s in cases)
    frac = len(wins) / len(cases)
    report(capsys, 6, frac >= 0.8,
           f"erosion <= dilation on {len(wins)}/{len(cases)} sweep cases ({frac:.0%}, need 80%); "
           f"erode/dilate {ratios}")


def test_criterion_7_sweep_beats_brute(default_suite, capsys):
    t = {(r.model, r.size, r.op, r.engine): r.seconds for r in default_suite if r.size >= 256}
    cases = sorted({k[:3] for k in t})
    losses = [c for c in cases if t[(*c, "sweep")] > t[(*c, "brute")]]
    ratios = ", ".join(f"{m}/{op} {t[(m, s, op, 'brute')] / t[(m, s, op, 'sweep')]:.2f}x"
                       for m, s, op in cases)
    report(capsys, 7, not losses,
           f"size 256, radius 0.05: sweep no slower on {len(cases) - len(losses)}/{len(cases)} cases; "
           f"brute/sweep {ratios}")


def test_criterion_8_out_of_scope(capsys):
    with capsys.disabled():
        print("\nN/A criterion 8: GPU timing comparisons, Hausdorff comparisons against reference meshes "
              "and 2048-resolution memory figures are not reproduced; criteria 1 to 7 stand in for them")
