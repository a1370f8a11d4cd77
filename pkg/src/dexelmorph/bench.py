"""Benchmark harness: timed morphology runs over procedural models.

Each configuration is timed by wall clock around the operation alone (no
model construction, no I/O) and reported as the median of several runs.
Radii are given relative to the grid size, so ``rel_radius = 0.05`` on a
256 grid is a ball of 12.8 dexels.
"""

from __future__ import annotations

import csv
import logging
import math
import statistics
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .models import MODELS, model_grid, solid_box
from .morphology import close_grid, open_grid
from .offset3d import dilate_grid, erode_grid

log = logging.getLogger(__name__)

OPS = {
    "dilate": dilate_grid,
    "erode": erode_grid,
    "open": lambda g, r, threads, engine: open_grid(g, r, threads, engine),
    "close": lambda g, r, threads, engine: close_grid(g, r, threads, engine),
}

SUITES = {
    "default": dict(sizes=(64, 128, 256), radii=(0.05,), threads=(1,), engines=("sweep", "brute"),
                    ops=("dilate", "erode")),
    "scaling": dict(sizes=(64, 128, 256, 512), radii=(0.05,), threads=(1,), engines=("sweep",),
                    ops=("dilate",)),
    "radius": dict(sizes=(128,), radii=(0.01, 0.02, 0.05, 0.1), threads=(1,), engines=("sweep", "brute"),
                   ops=("dilate",)),
    "threads": dict(sizes=(512,), radii=(0.05,), threads=(1, 2, 4), engines=("sweep",), ops=("dilate",)),
    "quick": dict(sizes=(32, 64), radii=(0.05,), threads=(1,), engines=("sweep", "brute"),
                  ops=("dilate", "erode")),
}


@dataclass(frozen=True)
class BenchRecord:
    model: str
    op: str
    engine: str
    size: int
    rel_radius: float
    threads: int
    seconds: float
    n: int  # input segments
    m: int  # output segments

    def __post_init__(self):
        if not self.seconds > 0:
            raise InvalidInputError(f"time must be > 0, got {self.seconds}")
        if self.n < 0 or self.m < 0:
            raise InvalidInputError("segment counts must be >= 0")


FIELDS = [f.name for f in fields(BenchRecord)]


def warm_up() -> None:
    """Compile every kernel once so the first timed run is not a JIT build."""
    g = solid_box(3, pad=1)
    for op in OPS.values():
        for engine in ("sweep", "brute"):
            op(g, 1.5, 1, engine)


def time_op(grid, op: str, r: float, threads: int, engine: str, repetitions: int = 3):
    """Median wall time of ``repetitions`` runs and the last result."""
    fn = OPS[op]
    times = []
    out = None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        out = fn(grid, r, threads, engine)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def run_suite(models=tuple(MODELS), sizes=(64, 128, 256), radii=(0.05,), threads=(1,),
              engines=("sweep", "brute"), ops=("dilate", "erode"), repetitions=3,
              failures: list | None = None, progress=None) -> list[BenchRecord]:
    """Time every configuration; records come out in loop order (model, size, radius, op, engine, threads).

    A model that fails to build or run is logged, appended to ``failures`` as
    ``(model, size, message)`` and skipped; the rest of the suite continues.
    """
    if repetitions < 3:
        raise InvalidInputError("need at least 3 repetitions")
    for name in models:
        if name not in MODELS:
            raise InvalidInputError(f"unknown model {name!r}")
    for op in ops:
        if op not in OPS:
            raise InvalidInputError(f"unknown operation {op!r}")
    for engine in engines:
        if engine not in ("sweep", "brute"):
            raise InvalidInputError(f"unknown engine {engine!r}")
    warm_up()
    records = []
    for name in models:
        for size in sizes:
            try:
                grid = model_grid(name, size)
                for rel in radii:
                    r = rel * size * grid.spacing
                    for op in ops:
                        for engine in engines:
                            for t in threads:
                                secs, out = time_op(grid, op, r, t, engine, repetitions)
                                rec = BenchRecord(name, op, engine, size, rel, t, secs,
                                                  grid.n_segments, out.n_segments)
                                records.append(rec)
                                if progress:
                                    progress(rec)
            except Exception as exc:  # noqa: BLE001 - a failing model must not stop the suite
                log.warning("model %s at size %d failed: %s", name, size, exc)
                if failures is not None:
                    failures.append((name, size, str(exc)))
    return records


def fit_loglog_slope(points) -> float:
    """Least-squares slope of log(time) against log(size)."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise InvalidInputError("need at least 3 (size, time) pairs")
    if not np.all(pts > 0) or not np.all(np.isfinite(pts)):
        raise InvalidInputError("sizes and times must be positive and finite")
    slope, _ = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    return float(slope)


# output -----------------------------------------------------------------------


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=FIELDS)
        w.writeheader()
        for rec in records:
            row = asdict(rec)
            row["seconds"] = f"{rec.seconds:.6f}"
            w.writerow(row)


def read_csv(path) -> list[BenchRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [BenchRecord(r["model"], r["op"], r["engine"], int(r["size"]), float(r["rel_radius"]),
                        int(r["threads"]), float(r["seconds"]), int(r["n"]), int(r["m"])) for r in rows]


def summary_table(records) -> str:
    """Plain-text table, one line per record plus per-model slopes where sizes allow."""
    head = f"{'model':<18}{'op':<8}{'engine':<7}{'size':>6}{'rel_r':>7}{'thr':>4}{'seconds':>10}{'n':>10}{'m':>10}"
    lines = [head, "-" * len(head)]
    for r in records:
        lines.append(f"{r.model:<18}{r.op:<8}{r.engine:<7}{r.size:>6}{r.rel_radius:>7.3f}{r.threads:>4}"
                     f"{r.seconds:>10.4f}{r.n:>10}{r.m:>10}")
    slopes = scaling_slopes(records)
    if slopes:
        lines.append("")
        lines.append("log-log slope of time vs size:")
        for key, v in slopes.items():
            lines.append(f"  {' '.join(map(str, key))}: {v:.2f}")
    return "\n".join(lines)


def _group(records, key):
    out = {}
    for r in records:
        out.setdefault(key(r), []).append(r)
    return out


def scaling_slopes(records) -> dict:
    """Slope per (model, op, engine, rel_radius, threads) series with 3 or more sizes."""
    slopes = {}
    for k, recs in _group(records, lambda r: (r.model, r.op, r.engine, r.rel_radius, r.threads)).items():
        if len({r.size for r in recs}) >= 3:
            slopes[k] = fit_loglog_slope((r.size, r.seconds) for r in recs)
    return slopes


def pooled_slope(records, op="dilate", engine="sweep") -> float:
    """One slope over all models: each model's times are normalized by their geometric mean."""
    pts = []
    for _, recs in _group([r for r in records if r.op == op and r.engine == engine],
                          lambda r: (r.model, r.rel_radius, r.threads)).items():
        t = np.array([r.seconds for r in recs])
        scale = math.exp(np.log(t).mean())
        pts += [(r.size, r.seconds / scale) for r in recs]
    return fit_loglog_slope(pts)


# figures ----------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_scaling(records, path) -> None:
    """Time against grid size on log-log axes, one line per model and engine."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (model, op, engine), recs in sorted(_group(records, lambda r: (r.model, r.op, r.engine)).items()):
        recs = sorted(recs, key=lambda r: r.size)
        ax.plot([r.size for r in recs], [r.seconds for r in recs], "o-" if engine == "sweep" else "s--",
                label=f"{model} {op} ({engine})")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("grid size")
    ax.set_ylabel("wall time [s]")
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_erosion_vs_dilation(records, path) -> None:
    plt = _pyplot()
    pairs = []
    for key, recs in sorted(_group(records, lambda r: (r.model, r.engine, r.size, r.rel_radius, r.threads)).items()):
        ops = {r.op: r.seconds for r in recs}
        if "dilate" in ops and "erode" in ops:
            pairs.append((f"{key[0]}\n{key[1]} {key[2]}", ops["dilate"], ops["erode"]))
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(pairs)), 4.5))
    x = np.arange(len(pairs))
    ax.bar(x - 0.2, [p[1] for p in pairs], 0.4, label="dilate")
    ax.bar(x + 0.2, [p[2] for p in pairs], 0.4, label="erode")
    ax.set_xticks(x)
    ax.set_xticklabels([p[0] for p in pairs], fontsize=6, rotation=90)
    ax.set_ylabel("wall time [s]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_threads(records, path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    for (model, size), recs in sorted(_group(records, lambda r: (r.model, r.size)).items()):
        recs = sorted(recs, key=lambda r: r.threads)
        base = recs[0].seconds * recs[0].threads
        ax.plot([r.threads for r in recs], [base / r.seconds for r in recs], "o-", label=f"{model} {size}")
    top = max((r.threads for r in records), default=1)
    ax.plot([1, top], [1, top], "k:", label="linear")
    ax.set_xlabel("threads")
    ax.set_ylabel("speedup")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_figures(records, stem) -> list[Path]:
    """Render whichever figures the records support; returns the files written."""
    stem = Path(stem)
    out = []
    if len({r.size for r in records}) >= 2:
        out.append(stem.with_name(stem.name + "_scaling.png"))
        plot_scaling(records, out[-1])
    if {"dilate", "erode"} <= {r.op for r in records}:
        out.append(stem.with_name(stem.name + "_erode_vs_dilate.png"))
        plot_erosion_vs_dilation(records, out[-1])
    if len({r.threads for r in records}) >= 2:
        out.append(stem.with_name(stem.name + "_threads.png"))
        plot_threads(records, out[-1])
    return out
