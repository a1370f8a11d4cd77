"""``dexelmorph`` command line.

Exit codes: 0 success, 1 ``compare`` found a difference, 2 usage error,
3 data error (unreadable input, bad mesh, incompatible grids).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench, io
from .dexel import GridConfig, grid_boolean, grids_equal
from .errors import DexelError
from .mesh import dexelize, load_mesh
from .models import MODELS, model_grid
from .morphology import close_grid, open_grid, shell_grid
from .offset3d import dilate_grid, erode_grid

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3

_MORPH = {"dilate": dilate_grid, "erode": erode_grid,
          "open": lambda g, r, t, e: open_grid(g, r, t, e),
          "close": lambda g, r, t, e: close_grid(g, r, t, e)}


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(t) for t in text.split(",") if t]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dexelmorph", description="Exact morphology on dexel grids.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dexelize", help="ray-cast a watertight OBJ/STL mesh into a .dxl grid")
    d.add_argument("mesh")
    d.add_argument("-o", "--output", required=True)
    d.add_argument("--resolution", type=_positive_int, default=128)
    d.add_argument("--axis", choices=("x", "y", "z"), default="z")
    d.add_argument("--padding", type=_nonneg_float, default=0.0)

    m = sub.add_parser("model", help="write one of the procedural test solids")
    m.add_argument("name", choices=sorted(MODELS))
    m.add_argument("-o", "--output", required=True)
    m.add_argument("--resolution", type=_positive_int, default=128)

    def morph_flags(q):
        q.add_argument("--radius-unit", choices=("world", "dexel"), default="world")
        q.add_argument("--engine", choices=("sweep", "brute"), default="sweep")
        q.add_argument("--threads", type=_positive_int, default=None)

    for name in _MORPH:
        q = sub.add_parser(name, help=f"{name} by a ball")
        q.add_argument("input")
        q.add_argument("-o", "--output", required=True)
        q.add_argument("--radius", type=_nonneg_float, required=True)
        morph_flags(q)

    s = sub.add_parser("shell", help="dilate(r_out) minus erode(r_in)")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--r-out", type=_nonneg_float, required=True)
    s.add_argument("--r-in", type=_nonneg_float, required=True)
    morph_flags(s)

    b = sub.add_parser("boolean", help="union, intersection or difference of two grids")
    b.add_argument("a")
    b.add_argument("b")
    b.add_argument("--op", choices=("union", "intersection", "difference"), required=True)
    b.add_argument("-o", "--output", required=True)

    e = sub.add_parser("export", help="inspection OBJ of the intervals")
    e.add_argument("input")
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--mode", choices=("points", "boxes"), default="points")

    c = sub.add_parser("compare", help="exit 0 if two grids are interval-equal within --eps")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--eps", type=_nonneg_float, default=None, help="default: 1e-9 * grid diagonal")

    r = sub.add_parser("bench", help="time the procedural suite, write CSV and figures")
    r.add_argument("--suite", choices=sorted(bench.SUITES), default="default")
    r.add_argument("-o", "--output", default="results.csv")
    r.add_argument("--models", type=_csv_list(str), default=None)
    r.add_argument("--sizes", type=_csv_list(int), default=None)
    r.add_argument("--radii", type=_csv_list(float), default=None, help="relative to grid size")
    r.add_argument("--threads", type=_csv_list(int), default=None)
    r.add_argument("--engines", type=_csv_list(str), default=None)
    r.add_argument("--ops", type=_csv_list(str), default=None)
    r.add_argument("--repetitions", type=int, default=3)
    r.add_argument("--no-figures", action="store_true")
    return p


def _radius(grid, value, unit):
    return value * grid.spacing if unit == "dexel" else value


def _run(args) -> int:
    cmd = args.command
    if cmd == "dexelize":
        grid = dexelize(load_mesh(args.mesh), GridConfig(args.resolution, args.padding, args.axis))
        io.save(grid, args.output)
    elif cmd == "model":
        io.save(model_grid(args.name, args.resolution), args.output)
    elif cmd in _MORPH:
        grid = io.load(args.input)
        out = _MORPH[cmd](grid, _radius(grid, args.radius, args.radius_unit), args.threads, args.engine)
        io.save(out, args.output)
    elif cmd == "shell":
        grid = io.load(args.input)
        out = shell_grid(grid, _radius(grid, args.r_out, args.radius_unit),
                         _radius(grid, args.r_in, args.radius_unit), args.threads, args.engine)
        io.save(out, args.output)
    elif cmd == "boolean":
        io.save(grid_boolean(io.load(args.a), io.load(args.b), args.op), args.output)
    elif cmd == "export":
        io.export_obj(io.load(args.input), args.output, args.mode)
    elif cmd == "compare":
        a, b = io.load(args.a), io.load(args.b)
        eps = a.eps_merge if args.eps is None else args.eps
        same, where = grids_equal(a, b, eps)
        if not same:
            i, j = where
            print(f"differ at column ({i}, {j}): {list(a.column(i, j))} vs {list(b.column(i, j))}")
            return EXIT_MISMATCH
        print("equal")
    elif cmd == "bench":
        return _bench(args)
    return EXIT_OK


def _bench(args) -> int:
    cfg = dict(bench.SUITES[args.suite])
    for key in ("sizes", "radii", "threads", "engines", "ops"):
        if getattr(args, key) is not None:
            cfg[key] = tuple(getattr(args, key))
    models = tuple(args.models) if args.models else tuple(MODELS)
    failures = []
    records = bench.run_suite(models, repetitions=args.repetitions, failures=failures,
                              progress=lambda r: logging.info("%s", r), **cfg)
    out = Path(args.output)
    bench.write_csv(records, out)
    print(bench.summary_table(records))
    if not args.no_figures and records:
        for path in bench.write_figures(records, out.with_suffix("")):
            print(f"figure: {path}")
    for name, size, msg in failures:
        print(f"failed: {name} at {size}: {msg}", file=sys.stderr)
    return EXIT_DATA if failures and not records else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return _run(args)
    except (DexelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
