"""HGLW binary snapshots.

Layout (little-endian)::

    b"HGLW"  u32 version  u32 n  u32 k  u32 cells[n]
    f64 spacing  f64 origin[n]  f64 time  f64 epsilon
    f64 u[k][cells...]  f64 ut[k][cells...]      (row-major, component-major)

The boundary condition is not part of the format; readers get periodic
grids unless told otherwise.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..field import Boundary, FieldState, Grid

MAGIC = b"HGLW"
VERSION = 1


class SnapshotFormatError(ValueError):
    """Bad magic, unsupported version or truncated payload."""


def encode(state: FieldState) -> bytes:
    g = state.grid
    head = [MAGIC, struct.pack("<III", VERSION, g.dim, state.k), struct.pack(f"<{g.dim}I", *g.cells),
            struct.pack("<d", g.spacing), struct.pack(f"<{g.dim}d", *g.origin),
            struct.pack("<dd", state.time, state.epsilon)]
    body = [np.ascontiguousarray(state.u, dtype="<f8").tobytes(),
            np.ascontiguousarray(state.ut, dtype="<f8").tobytes()]
    return b"".join(head + body)


def decode(buf: bytes, boundary: Boundary = Boundary.PERIODIC) -> FieldState:
    if buf[:4] != MAGIC:
        raise SnapshotFormatError("not an HGLW snapshot (bad magic)")
    off = 4
    if len(buf) < off + 12:
        raise SnapshotFormatError("truncated header")
    version, n, k = struct.unpack_from("<III", buf, off)
    off += 12
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported HGLW version {version} (reader knows {VERSION})")
    if not 1 <= n <= 3 or k not in (1, 2):
        raise SnapshotFormatError(f"bad header dimensions n={n}, k={k}")
    need = off + 4 * n + 8 + 8 * n + 16
    if len(buf) < need:
        raise SnapshotFormatError("truncated header")
    cells = struct.unpack_from(f"<{n}I", buf, off)
    off += 4 * n
    (spacing,) = struct.unpack_from("<d", buf, off)
    off += 8
    origin = struct.unpack_from(f"<{n}d", buf, off)
    off += 8 * n
    time, eps = struct.unpack_from("<dd", buf, off)
    off += 16
    count = k * int(np.prod(cells))
    if len(buf) != off + 16 * count:
        raise SnapshotFormatError(f"payload has {len(buf) - off} bytes, expected {16 * count}")
    data = np.frombuffer(buf, dtype="<f8", count=2 * count, offset=off).astype(float)
    grid = Grid(tuple(cells), spacing, origin, boundary)
    return FieldState(grid, k, eps, time, data[:count], data[count:])


def write_snapshot(state: FieldState, path) -> Path:
    path = Path(path)
    path.write_bytes(encode(state))
    return path


def read_snapshot(path, boundary: Boundary = Boundary.PERIODIC) -> FieldState:
    return decode(Path(path).read_bytes(), boundary)
