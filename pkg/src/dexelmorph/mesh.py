"""Triangle meshes: OBJ/STL reading and writing, and ray-cast dexelization.

A column's intervals are the sorted ray/surface crossings paired up
(even-odd rule).  A ray that passes exactly through an edge or vertex of
the projected mesh is moved by ``(eps, eps**2)``, ``eps = 1e-7 * spacing``,
and cast again, so shared edges are counted once.
"""

from __future__ import annotations

import math
import re
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .dexel import DexelGrid, GridConfig, grid_normalize
from .errors import InvalidInputError, MeshFormatError, NonWatertightError

PERTURB = 1e-7

# rays run along z; an axis choice rotates the mesh so that axis becomes z
_AXIS_ORDER = {"z": (0, 1, 2), "x": (1, 2, 0), "y": (2, 0, 1)}


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (n, 3) float64
    faces: np.ndarray  # (m, 3) int64
    dropped: int = 0  # degenerate faces removed at ingest

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, np.float64).reshape(-1, 3)
        f = np.ascontiguousarray(self.faces, np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise InvalidInputError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @classmethod
    def build(cls, vertices, faces) -> "TriangleMesh":
        """Create a mesh, dropping zero-area triangles (with a warning)."""
        v = np.asarray(vertices, np.float64).reshape(-1, 3)
        f = np.asarray(faces, np.int64).reshape(-1, 3)
        if len(f) == 0:
            raise InvalidInputError("mesh has no faces")
        if f.min() < 0 or f.max() >= len(v):
            raise InvalidInputError("face index out of range")
        a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
        keep = area2 > 0
        dropped = int((~keep).sum())
        if dropped:
            warnings.warn(f"dropped {dropped} degenerate triangle(s)", stacklevel=2)
        if not keep.any():
            raise InvalidInputError("mesh has no non-degenerate faces")
        return cls(v, f[keep], dropped)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def volume(self) -> float:
        """Signed enclosed volume (divergence theorem); positive for outward faces."""
        a, b, c = (self.vertices[self.faces[:, k]] for k in range(3))
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def max_edge(self) -> float:
        v, f = self.vertices, self.faces
        e = [np.linalg.norm(v[f[:, k]] - v[f[:, (k + 1) % 3]], axis=1) for k in range(3)]
        return float(np.max(e))


# reading ----------------------------------------------------------------------


def load_mesh(path) -> TriangleMesh:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        return _load_obj(path.read_text(errors="replace"))
    if suffix == ".stl":
        return _load_stl(path.read_bytes())
    raise InvalidInputError(f"unsupported mesh format {path.suffix!r} (need .obj or .stl)")


def _load_obj(text: str) -> TriangleMesh:
    verts, faces = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ValueError("vertex needs 3 coordinates")
                verts.append([float(t) for t in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    k = int(tok.split("/")[0])
                    idx.append(k - 1 if k > 0 else len(verts) + k)
                if len(idx) < 3:
                    raise ValueError("face needs at least 3 vertices")
                faces.extend([idx[0], idx[t], idx[t + 1]] for t in range(1, len(idx) - 1))
        except ValueError as exc:
            raise MeshFormatError(f"OBJ line {lineno}: {exc}") from None
    if not faces:
        raise InvalidInputError("mesh has no faces")
    f = np.array(faces, np.int64)
    if f.min() < 0 or f.max() >= len(verts):
        raise MeshFormatError("OBJ face references a missing vertex")
    return TriangleMesh.build(verts, f)


def _weld(corners: np.ndarray) -> TriangleMesh:
    uniq, inverse = np.unique(corners.reshape(-1, 3), axis=0, return_inverse=True)
    return TriangleMesh.build(uniq, inverse.reshape(-1, 3))


_FLOAT = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_VERTEX_RE = re.compile(rf"^\s*vertex\s+({_FLOAT})\s+({_FLOAT})\s+({_FLOAT})\s*$")


def _load_stl(blob: bytes) -> TriangleMesh:
    if len(blob) >= 84:
        (n,) = struct.unpack_from("<I", blob, 80)
        if len(blob) == 84 + 50 * n:
            return _load_stl_binary(blob, n)
    if blob.lstrip().startswith(b"solid"):
        return _load_stl_ascii(blob.decode("ascii", errors="replace"))
    if len(blob) < 84:
        raise MeshFormatError(f"binary STL truncated at byte {len(blob)} (header needs 84)")
    (n,) = struct.unpack_from("<I", blob, 80)
    raise MeshFormatError(f"binary STL truncated: {n} facets need {84 + 50 * n} bytes, got {len(blob)}")


def _load_stl_binary(blob: bytes, n: int) -> TriangleMesh:
    if n == 0:
        raise InvalidInputError("mesh has no faces")
    rec = np.dtype([("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    facets = np.frombuffer(blob, rec, n, 84)
    return _weld(facets["v"].astype(np.float64))


def _load_stl_ascii(text: str) -> TriangleMesh:
    corners = []
    pending = []
    ended = False
    for lineno, line in enumerate(text.splitlines(), 1):
        word = line.split()[0] if line.split() else ""
        if word == "vertex":
            m = _VERTEX_RE.match(line)
            if not m:
                raise MeshFormatError(f"STL line {lineno}: malformed vertex")
            pending.append([float(g) for g in m.groups()])
        elif word == "endloop":
            if len(pending) != 3:
                raise MeshFormatError(f"STL line {lineno}: facet with {len(pending)} vertices")
            corners.append(pending)
            pending = []
        elif word == "endsolid":
            ended = True
    if pending or not ended:
        raise MeshFormatError(f"STL truncated after line {len(text.splitlines())}")
    if not corners:
        raise InvalidInputError("mesh has no faces")
    return _weld(np.array(corners, np.float64))


# writing ----------------------------------------------------------------------


def save_obj(mesh: TriangleMesh, path) -> None:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def save_stl(mesh: TriangleMesh, path, binary: bool = True) -> None:
    tri = mesh.vertices[mesh.faces]
    nrm = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    nrm /= np.maximum(np.linalg.norm(nrm, axis=1, keepdims=True), 1e-300)
    if binary:
        rec = np.zeros(len(tri), np.dtype([("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]))
        rec["normal"] = nrm
        rec["v"] = tri
        Path(path).write_bytes(b"\0" * 80 + struct.pack("<I", len(tri)) + rec.tobytes())
        return
    out = ["solid mesh"]
    for n, t in zip(nrm.tolist(), tri.tolist()):
        out.append(f"  facet normal {n[0]!r} {n[1]!r} {n[2]!r}")
        out.append("    outer loop")
        out.extend(f"      vertex {x!r} {y!r} {z!r}" for x, y, z in t)
        out.append("    endloop")
        out.append("  endfacet")
    out.append("endsolid mesh")
    Path(path).write_text("\n".join(out) + "\n")


# ray casting ------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _cast(V, F, x0, y0, s, nx, ny, px, py, only):
    """Crossings of rays at column centres shifted by ``(px, py)``.

    ``only`` (length nx*ny, or empty) restricts casting to flagged columns.
    Returns hit columns, hit depths and a per-column flag for rays that
    touched an edge or vertex exactly.
    """
    cap = 1024
    hc = np.empty(cap, np.int64)
    hz = np.empty(cap)
    nh = 0
    degenerate = np.zeros(nx * ny, np.bool_)
    use_only = only.shape[0] > 0
    for t in range(F.shape[0]):
        ax, ay, az = V[F[t, 0], 0], V[F[t, 0], 1], V[F[t, 0], 2]
        bx, by, bz = V[F[t, 1], 0], V[F[t, 1], 1], V[F[t, 1], 2]
        cx, cy, cz = V[F[t, 2], 0], V[F[t, 2], 1], V[F[t, 2], 2]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0:
            continue  # parallel to the rays
        lo_x = min(ax, bx, cx)
        hi_x = max(ax, bx, cx)
        lo_y = min(ay, by, cy)
        hi_y = max(ay, by, cy)
        i0 = max(0, int(math.ceil((lo_x - px - x0) / s - 0.5)) - 1)
        i1 = min(nx - 1, int(math.floor((hi_x - px - x0) / s - 0.5)) + 1)
        j0 = max(0, int(math.ceil((lo_y - py - y0) / s - 0.5)) - 1)
        j1 = min(ny - 1, int(math.floor((hi_y - py - y0) / s - 0.5)) + 1)
        for j in range(j0, j1 + 1):
            qy = y0 + (j + 0.5) * s + py
            for i in range(i0, i1 + 1):
                c = j * nx + i
                if use_only and not only[c]:
                    continue
                qx = x0 + (i + 0.5) * s + px
                wa = (bx - qx) * (cy - qy) - (by - qy) * (cx - qx)
                wb = (cx - qx) * (ay - qy) - (cy - qy) * (ax - qx)
                wc = (ax - qx) * (by - qy) - (ay - qy) * (bx - qx)
                if area > 0:
                    inside = wa >= 0 and wb >= 0 and wc >= 0
                else:
                    inside = wa <= 0 and wb <= 0 and wc <= 0
                if not inside:
                    continue
                if wa == 0.0 or wb == 0.0 or wc == 0.0:
                    degenerate[c] = True
                    continue
                if nh == cap:
                    cap *= 2
                    hc2 = np.empty(cap, np.int64)
                    hz2 = np.empty(cap)
                    hc2[:nh] = hc[:nh]
                    hz2[:nh] = hz[:nh]
                    hc = hc2
                    hz = hz2
                hc[nh] = c
                hz[nh] = (wa * az + wb * bz + wc * cz) / (wa + wb + wc)
                nh += 1
    return hc[:nh].copy(), hz[:nh].copy(), degenerate


def grid_geometry(mesh: TriangleMesh, config: GridConfig):
    """Lattice size, origin, spacing and z domain for ``mesh`` under ``config``."""
    lo, hi = mesh.bounds
    lo = lo - config.padding
    hi = hi + config.padding
    ext = hi - lo
    longest = float(ext.max())
    if not longest > 0:
        raise InvalidInputError("mesh has zero extent")
    s = longest / config.resolution
    nx = max(1, math.ceil(ext[0] / s - 1e-9))
    ny = max(1, math.ceil(ext[1] / s - 1e-9))
    z0, z1 = float(lo[2]), float(hi[2])
    if not z1 > z0:
        z1 = z0 + s
    return nx, ny, (float(lo[0]), float(lo[1])), s, (z0, z1)


def reorient(mesh: TriangleMesh, axis: str) -> TriangleMesh:
    """Rotate coordinates so ``axis`` becomes the ray direction z (cyclic permutation)."""
    if axis not in _AXIS_ORDER:
        raise InvalidInputError(f"axis must be x, y or z, got {axis!r}")
    if axis == "z":
        return mesh
    return TriangleMesh(mesh.vertices[:, list(_AXIS_ORDER[axis])], mesh.faces, mesh.dropped)


def dexelize(mesh: TriangleMesh, config: GridConfig | None = None) -> DexelGrid:
    """Cast one ray per lattice cell centre and pair up the crossings."""
    config = config or GridConfig()
    mesh = reorient(mesh, config.axis)
    nx, ny, (x0, y0), s, zdom = grid_geometry(mesh, config)
    V, F = mesh.vertices, mesh.faces
    none = np.zeros(0, np.bool_)
    hc, hz, bad = _cast(V, F, x0, y0, s, nx, ny, 0.0, 0.0, none)
    if bad.any():
        keep = ~bad[hc]
        eps = PERTURB * s
        pc, pz, still = _cast(V, F, x0, y0, s, nx, ny, eps, eps * eps, bad)
        hc = np.concatenate([hc[keep], pc])
        hz = np.concatenate([hz[keep], pz])
    order = np.lexsort((hz, hc))
    hc, hz = hc[order], hz[order]
    counts = np.bincount(hc, minlength=nx * ny)
    odd = np.flatnonzero(counts % 2)
    if odd.size:
        c = int(odd[0])
        raise NonWatertightError((c % nx, c // nx), int(counts[c]))
    ptr = np.zeros(nx * ny + 1, np.int64)
    np.cumsum(counts // 2, out=ptr[1:])
    data = hz.reshape(-1, 2)
    g = DexelGrid(nx, ny, (x0, y0), s, zdom, ptr, np.clip(data, zdom[0], zdom[1]))
    return grid_normalize(g)


# procedural meshes ------------------------------------------------------------


def box_mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> TriangleMesh:
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    v = [(x, y, z) for z in (z0, z1) for y in (y0, y1) for x in (x0, x1)]
    quads = [(0, 2, 3, 1), (4, 5, 7, 6), (0, 1, 5, 4), (2, 6, 7, 3), (0, 4, 6, 2), (1, 3, 7, 5)]
    f = [tri for a, b, c, d in quads for tri in ((a, b, c), (a, c, d))]
    return TriangleMesh(np.array(v, float), np.array(f))


def icosphere(subdivisions: int = 3, center=(0.0, 0.0, 0.0), radius: float = 1.0) -> TriangleMesh:
    t = (1 + 5 ** 0.5) / 2
    v = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
         (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(p, float) / np.linalg.norm(p) for p in v]
    for _ in range(subdivisions):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        f = [tri for a, b, c in f for tri in
             ((a, mid(a, b), mid(a, c)), (b, mid(b, c), mid(a, b)), (c, mid(a, c), mid(b, c)),
              (mid(a, b), mid(b, c), mid(a, c)))]
    return TriangleMesh(np.array(verts) * radius + np.asarray(center, float), np.array(f))


def tube_mesh(curve: np.ndarray, radius: float, sides: int = 12) -> TriangleMesh:
    """Closed tube around a closed polyline (last point joins the first)."""
    n = len(curve)
    tangent = np.roll(curve, -1, axis=0) - np.roll(curve, 1, axis=0)
    tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
    ref = np.array([0.0, 0.0, 1.0])
    normal = np.cross(tangent, ref)
    weak = np.linalg.norm(normal, axis=1) < 1e-6
    normal[weak] = np.cross(tangent[weak], [1.0, 0.0, 0.0])
    normal /= np.linalg.norm(normal, axis=1, keepdims=True)
    binormal = np.cross(tangent, normal)
    ang = 2 * np.pi * np.arange(sides) / sides
    ring = (np.cos(ang)[None, :, None] * normal[:, None, :] + np.sin(ang)[None, :, None] * binormal[:, None, :])
    verts = (curve[:, None, :] + radius * ring).reshape(-1, 3)
    f = []
    for a in range(n):
        b = (a + 1) % n
        for k in range(sides):
            k2 = (k + 1) % sides
            p, q, r_, s_ = a * sides + k, a * sides + k2, b * sides + k2, b * sides + k
            f += [(p, q, r_), (p, r_, s_)]
    return TriangleMesh(verts, np.array(f))


def torus_knot_mesh(p: int = 2, q: int = 3, tube: float = 0.25, samples: int = 256, sides: int = 12) -> TriangleMesh:
    t = 2 * np.pi * np.arange(samples) / samples
    rad = np.cos(q * t) + 2.0
    curve = np.stack([rad * np.cos(p * t), rad * np.sin(p * t), -np.sin(q * t)], axis=1)
    return tube_mesh(curve, tube, sides)
