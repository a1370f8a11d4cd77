import csv

import pytest

from dexelmorph import bench, models
from dexelmorph.bench import BenchRecord, fit_loglog_slope, run_suite
from dexelmorph.errors import InvalidInputError


def test_slope_examples():
    assert fit_loglog_slope([(1, 1), (2, 8), (4, 64)]) == pytest.approx(3.0)
    assert fit_loglog_slope([(1, 5), (2, 5), (4, 5)]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("pts", [[(1, 1), (2, 2)], [(1, 1), (2, 0), (4, 3)], [(-1, 1), (2, 2), (4, 4)]])
def test_slope_rejects(pts):
    with pytest.raises(InvalidInputError):
        fit_loglog_slope(pts)


def test_record_invariants():
    with pytest.raises(InvalidInputError):
        BenchRecord("sphere", "dilate", "sweep", 64, 0.05, 1, 0.0, 1, 1)
    with pytest.raises(InvalidInputError):
        BenchRecord("sphere", "dilate", "sweep", 64, 0.05, 1, 1.0, -1, 1)


@pytest.fixture(scope="module")
def small_suite():
    return run_suite(sizes=(16, 20, 24), radii=(0.05,), engines=("sweep", "brute"), ops=("dilate",),
                     repetitions=3)


def test_suite_cardinality(small_suite):
    for name in models.MODELS:
        for engine in ("sweep", "brute"):
            recs = [r for r in small_suite if r.model == name and r.engine == engine]
            assert [r.size for r in recs] == [16, 20, 24]
    assert len(small_suite) == len(models.MODELS) * 2 * 3


def test_suite_order_is_deterministic(small_suite):
    keys = [(r.model, r.size, r.engine) for r in small_suite]
    again = run_suite(sizes=(16, 20, 24), radii=(0.05,), engines=("sweep", "brute"), ops=("dilate",))
    assert [(r.model, r.size, r.engine) for r in again] == keys
    assert [(r.n, r.m) for r in again] == [(r.n, r.m) for r in small_suite]


def test_engines_agree_on_output_size(small_suite):
    by_key = {}
    for r in small_suite:
        by_key.setdefault((r.model, r.size), set()).add(r.m)
    assert all(len(v) == 1 for v in by_key.values())


def test_suite_validation():
    with pytest.raises(InvalidInputError):
        run_suite(repetitions=2)
    with pytest.raises(InvalidInputError):
        run_suite(models=("teapot",))
    with pytest.raises(InvalidInputError):
        run_suite(ops=("smooth",))
    with pytest.raises(InvalidInputError):
        run_suite(engines=("gpu",))


def test_failing_model_is_recorded(monkeypatch):
    def broken(size):
        raise RuntimeError("no mesh")

    monkeypatch.setitem(models.MODELS, "sphere", broken)
    failures = []
    recs = run_suite(models=("sphere", "box_union"), sizes=(16,), engines=("sweep",), ops=("dilate",),
                     failures=failures)
    assert failures == [("sphere", 16, "no mesh")]
    assert [r.model for r in recs] == ["box_union"]


def test_csv_round_trip(tmp_path, small_suite):
    path = tmp_path / "r.csv"
    bench.write_csv(small_suite, path)
    with open(path, newline="") as fh:
        assert next(csv.reader(fh)) == ["model", "op", "engine", "size", "rel_radius", "threads", "seconds",
                                        "n", "m"]
    back = bench.read_csv(path)
    assert [(r.model, r.size, r.n, r.m) for r in back] == [(r.model, r.size, r.n, r.m) for r in small_suite]
    assert all(abs(a.seconds - b.seconds) < 1e-6 for a, b in zip(back, small_suite))


def test_summary_and_slopes(small_suite):
    text = bench.summary_table(small_suite)
    assert text.splitlines()[0].split()[:3] == ["model", "op", "engine"]
    slopes = bench.scaling_slopes(small_suite)
    assert len(slopes) == len(models.MODELS) * 2
    assert isinstance(bench.pooled_slope(small_suite), float)


def test_figures(tmp_path):
    recs = [BenchRecord(m, op, "sweep", s, 0.05, t, 0.01 * s / t, 10, 20)
            for m in ("a", "b") for op in ("dilate", "erode") for s in (32, 64) for t in (1, 2)]
    paths = bench.write_figures(recs, tmp_path / "out")
    assert sorted(p.name for p in paths) == ["out_erode_vs_dilate.png", "out_scaling.png", "out_threads.png"]
    for p in paths:
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_brute_grows_faster_with_radius():
    recs = run_suite(models=("box_union",), sizes=(64,), radii=(0.02, 0.1), engines=("sweep", "brute"),
                     ops=("dilate",))
    t = {(r.engine, r.rel_radius): r.seconds for r in recs}
    assert t["brute", 0.1] / t["brute", 0.02] > t["sweep", 0.1] / t["sweep", 0.02]
