"""Grayscale images of 2-D snapshots."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..diagnostics import densities
from ..field import Boundary, FieldState
from .snapshot import read_snapshot

FIELDS = ("e", "l", "w", "u0", "u1", "abs_u")
MAXVAL = 65535


class UsageError(ValueError):
    """The request cannot be served for this input (wrong dimension or field)."""


def field_values(state: FieldState, name: str) -> np.ndarray:
    if name not in FIELDS:
        raise UsageError(f"unknown field {name!r}; choose one of {', '.join(FIELDS)}")
    if name in ("e", "l", "w"):
        return getattr(densities(state), name)
    u = state.u
    if name == "abs_u":
        return np.sqrt(np.sum(u * u, axis=0))
    c = int(name[1])
    if c >= state.k:
        raise UsageError(f"field {name} needs k >= {c + 1}, snapshot has k = {state.k}")
    return u[c]


def to_pgm(values: np.ndarray) -> tuple[bytes, float, float]:
    """Binary 16-bit PGM with linear scaling; returns (bytes, vmin, vmax).

    Row 0 of the image is the largest y so the picture has the usual
    orientation. A constant field maps to 0 everywhere.
    """
    v = np.asarray(values, dtype=float)
    vmin, vmax = float(v.min()), float(v.max())
    span = vmax - vmin
    scaled = np.zeros_like(v) if span == 0 else (v - vmin) / span * MAXVAL
    img = np.rint(scaled).astype(">u2").T[::-1]
    h, w = img.shape
    header = f"P5\n{w} {h}\n{MAXVAL}\n".encode("ascii")
    return header + np.ascontiguousarray(img).tobytes(), vmin, vmax


def read_pgm(buf: bytes) -> np.ndarray:
    """Inverse of :func:`to_pgm` for our own files (no comments in header)."""
    parts = buf.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[4], dtype=dtype, count=w * h).reshape(h, w)


def emit_heatmap(snapshot, field: str, out=None, boundary: Boundary = Boundary.PERIODIC) -> Path:
    """Write ``<out>.pgm`` and a ``<out>.json`` sidecar for one field of an n=2 snapshot.

    Parameters
    ----------
    snapshot : path or FieldState
    field : one of ``e l w u0 u1 abs_u``
    out : output path stem; defaults to the snapshot path with the field name appended.
    boundary : boundary used for the derivative stencils of e, l and w.
    """
    if isinstance(snapshot, FieldState):
        state, src = snapshot, None
    else:
        src = Path(snapshot)
        state = read_snapshot(src, boundary)
    if state.grid.dim != 2:
        raise UsageError(f"heatmaps need an n=2 snapshot, got n={state.grid.dim}")
    vals = field_values(state, field)
    data, vmin, vmax = to_pgm(vals)
    if out is None:
        if src is None:
            raise UsageError("output path required for in-memory states")
        out = src.with_name(f"{src.stem}_{field}")
    out = Path(out)
    pgm = out.with_suffix(".pgm")
    pgm.parent.mkdir(parents=True, exist_ok=True)
    pgm.write_bytes(data)
    meta = {"field": field, "min": vmin, "max": vmax, "maxval": MAXVAL, "time": state.time,
            "epsilon": state.epsilon, "k": state.k, "cells": list(state.grid.cells),
            "origin": list(state.grid.origin), "spacing": state.grid.spacing,
            "orientation": "row 0 = largest y, column 0 = smallest x"}
    pgm.with_suffix(".json").write_text(json.dumps(meta, indent=1) + "\n")
    return pgm


__all__ = ["emit_heatmap", "to_pgm", "read_pgm", "field_values", "FIELDS", "UsageError"]
