"""Dexel file formats and inspection export.

``.dxl`` is little-endian binary::

    b"DXL1" u32 nx u32 ny f64 origin_x f64 origin_y f64 spacing f64 z_min f64 z_max
    then nx*ny records, j outer / i inner: u32 count, count * (f64 z_in, f64 z_out)

``.dxl.txt`` carries the same content as text, one column per line, with
floats printed by ``repr`` so the round trip is exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .dexel import DexelGrid
from .errors import InvalidInputError

MAGIC = b"DXL1"
_HEADER = struct.Struct("<4sII5d")


def dumps(grid: DexelGrid) -> bytes:
    counts = np.diff(grid.ptr).astype("<u4")
    header = _HEADER.pack(MAGIC, grid.nx, grid.ny, grid.origin[0], grid.origin[1], grid.spacing,
                          grid.z_domain[0], grid.z_domain[1])
    # column c starts at byte 16 * ptr[c] + 4 * c: a u32 count, then its f64 pairs
    n = counts.size
    buf = np.empty(4 * n + 16 * grid.n_segments, np.uint8)
    starts = grid.ptr[:-1] * 16 + np.arange(n) * 4
    is_payload = np.ones(buf.size, bool)
    cview = counts.view(np.uint8).reshape(n, 4)
    for b in range(4):
        buf[starts + b] = cview[:, b]
        is_payload[starts + b] = False
    buf[is_payload] = np.ascontiguousarray(grid.data, "<f8").view(np.uint8).reshape(-1)
    return header + buf.tobytes()


def loads(blob: bytes) -> DexelGrid:
    if len(blob) < _HEADER.size:
        raise InvalidInputError("truncated .dxl header")
    magic, nx, ny, ox, oy, sp, z0, z1 = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise InvalidInputError(f"bad magic {magic!r}")
    body = memoryview(blob)[_HEADER.size:]
    n = nx * ny
    ptr = np.zeros(n + 1, np.int64)
    pos = 0
    chunks = []
    for c in range(n):
        if pos + 4 > len(body):
            raise InvalidInputError(f"truncated .dxl body at column {c}")
        (k,) = struct.unpack_from("<I", body, pos)
        pos += 4
        if pos + 16 * k > len(body):
            raise InvalidInputError(f"truncated .dxl body at column {c}")
        if k:
            chunks.append(np.frombuffer(body, "<f8", 2 * k, pos))
        pos += 16 * k
        ptr[c + 1] = ptr[c] + k
    if pos != len(body):
        raise InvalidInputError("trailing bytes after .dxl body")
    data = np.concatenate(chunks).reshape(-1, 2).astype(np.float64) if chunks else np.zeros((0, 2))
    return DexelGrid(nx, ny, (ox, oy), sp, (z0, z1), ptr, data)


def dumps_text(grid: DexelGrid) -> str:
    lines = [f"DXL1 {grid.nx} {grid.ny} {grid.origin[0]!r} {grid.origin[1]!r} {grid.spacing!r} "
             f"{grid.z_domain[0]!r} {grid.z_domain[1]!r}"]
    for c in range(grid.nx * grid.ny):
        seg = grid.data[grid.ptr[c]:grid.ptr[c + 1]]
        lines.append(" ".join([str(len(seg))] + [f"{float(v)!r}" for v in seg.ravel()]))
    return "\n".join(lines) + "\n"


def loads_text(text: str) -> DexelGrid:
    lines = text.splitlines()
    head = lines[0].split()
    if not head or head[0] != "DXL1":
        raise InvalidInputError("bad text header")
    nx, ny = int(head[1]), int(head[2])
    ox, oy, sp, z0, z1 = map(float, head[3:8])
    if len(lines) - 1 < nx * ny:
        raise InvalidInputError("truncated .dxl.txt body")
    ptr = np.zeros(nx * ny + 1, np.int64)
    vals = []
    for c, line in enumerate(lines[1:nx * ny + 1]):
        parts = line.split()
        k = int(parts[0])
        if len(parts) != 1 + 2 * k:
            raise InvalidInputError(f"malformed record on line {c + 2}")
        vals.extend(float(v) for v in parts[1:])
        ptr[c + 1] = ptr[c] + k
    data = np.array(vals, np.float64).reshape(-1, 2)
    return DexelGrid(nx, ny, (ox, oy), sp, (z0, z1), ptr, data)


def save(grid: DexelGrid, path) -> None:
    path = Path(path)
    if path.name.endswith(".txt"):
        path.write_text(dumps_text(grid))
    else:
        path.write_bytes(dumps(grid))


def load(path) -> DexelGrid:
    path = Path(path)
    if path.name.endswith(".txt"):
        return loads_text(path.read_text())
    return loads(path.read_bytes())


def export_obj(grid: DexelGrid, path, mode: str = "points") -> None:
    """Write an inspection OBJ: interval endpoints as vertices, or one cuboid per interval."""
    if mode not in ("points", "boxes"):
        raise InvalidInputError(f"unknown export mode {mode!r}")
    ci = np.repeat(np.arange(grid.nx * grid.ny), np.diff(grid.ptr))
    x = grid.origin[0] + (ci % grid.nx + 0.5) * grid.spacing
    y = grid.origin[1] + (ci // grid.nx + 0.5) * grid.spacing
    x, y = x.tolist(), y.tolist()
    z0, z1 = grid.data[:, 0].tolist(), grid.data[:, 1].tolist()
    out = []
    if mode == "points":
        for k in range(ci.size):
            out.append(f"v {x[k]!r} {y[k]!r} {z0[k]!r}")
            out.append(f"v {x[k]!r} {y[k]!r} {z1[k]!r}")
    else:
        h = grid.spacing / 2
        quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
        for k in range(ci.size):
            corners = [(x[k] + sx, y[k] + sy, zz) for zz in (z0[k], z1[k]) for sy in (-h, h) for sx in (-h, h)]
            # corner index bits: x -> 1, y -> 2, z -> 4
            for cx, cy, cz in corners:
                out.append(f"v {cx!r} {cy!r} {cz!r}")
            base = 8 * k + 1
            for q in quads:
                a, b, c, d = (base + v for v in q)
                out.append(f"f {a} {b} {c}")
                out.append(f"f {a} {c} {d}")
    Path(path).write_text("\n".join(out) + "\n")
