"""Grids, field states, the quartic potential and discrete spatial operators."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

MIN_CELLS = 8


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred lattice on ``origin + [0, cells*h)`` per axis."""

    cells: tuple[int, ...]
    spacing: float
    origin: tuple[float, ...] | None = None
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        cells = tuple(int(c) for c in np.atleast_1d(self.cells))
        if not 1 <= len(cells) <= 3:
            raise ValueError("grid dimension must be 1, 2 or 3")
        if min(cells) < MIN_CELLS:
            raise ValueError(f"need at least {MIN_CELLS} cells per axis, got {cells}")
        h = self.spacing
        if np.ndim(h) != 0:
            hs = np.unique(np.asarray(h, dtype=float))
            if hs.size != 1:
                raise ValueError("anisotropic spacing is not supported")
            h = float(hs[0])
        if not (math.isfinite(h) and h > 0):
            raise ValueError("spacing must be positive")
        origin = self.origin
        if origin is None:
            origin = (0.0,) * len(cells)
        origin = tuple(float(o) for o in np.atleast_1d(origin))
        if len(origin) != len(cells):
            raise ValueError("origin and cells disagree in dimension")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "spacing", float(h))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @classmethod
    def box(cls, lower, upper, cells, boundary=Boundary.PERIODIC) -> "Grid":
        """Grid covering ``[lower, upper]`` in every axis (a cube)."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        cells = np.atleast_1d(cells)
        if cells.size == 1 and lower.size > 1:
            cells = np.repeat(cells, lower.size)
        h = (upper - lower) / cells
        return cls(tuple(int(c) for c in cells), h, tuple(lower), boundary)

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def extent(self) -> tuple[float, ...]:
        return tuple(c * self.spacing for c in self.cells)

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def axes(self) -> list[np.ndarray]:
        """Cell-centre coordinates along each axis."""
        return [o + (np.arange(c) + 0.5) * self.spacing for o, c in zip(self.origin, self.cells)]

    def coords(self) -> np.ndarray:
        """Stacked cell-centre coordinates, shape ``(n, *cells)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))


def c_k(k: int, epsilon: float) -> float:
    """Scaling constant: ``epsilon`` for k=1, ``1/|log epsilon|`` for k=2."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if k == 1:
        return float(epsilon)
    if k == 2:
        return 1.0 / abs(math.log(epsilon))
    raise ValueError(f"k must be 1 or 2, got {k}")


class Potential(str, enum.Enum):
    """Double-well potential ``W(u) = (1 - |u|^2)^2 / 4``.

    Only the quartic kind exists; it is an enum so callers dispatch on it.
    """

    QUARTIC = "quartic"

    def __call__(self, u) -> np.ndarray:
        return potential_eval(self, u)

    def grad(self, u) -> np.ndarray:
        return potential_grad(self, u)


def _norm2(u, axis=0):
    u = np.asarray(u, dtype=float)
    return np.sum(u * u, axis=axis)


def potential_eval(p: Potential, u) -> np.ndarray:
    """``W(u)`` where ``u`` has its k components along axis 0."""
    return 0.25 * (1.0 - _norm2(u)) ** 2


def potential_grad(p: Potential, u) -> np.ndarray:
    """``grad W(u) = -(1 - |u|^2) u``, same shape as ``u``."""
    u = np.asarray(u, dtype=float)
    return -(1.0 - _norm2(u)) * u


def radial_potential(s):
    """``W~(s) = (1 - s^2)^2 / 4`` on the real line."""
    return 0.25 * (1.0 - np.asarray(s, dtype=float) ** 2) ** 2


@dataclass
class FieldState:
    """``(u, u_t)`` at one time; arrays have shape ``(k, *grid.cells)``."""

    grid: Grid
    k: int
    epsilon: float
    time: float
    u: np.ndarray
    ut: np.ndarray
    potential: Potential = Potential.QUARTIC

    def __post_init__(self):
        if self.k not in (1, 2):
            raise ValueError("k must be 1 or 2")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        shape = (self.k, *self.grid.cells)
        self.u = np.asarray(self.u, dtype=float).reshape(shape)
        self.ut = np.asarray(self.ut, dtype=float).reshape(shape)

    @property
    def diverged(self) -> bool:
        return not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.ut)))

    def copy(self) -> "FieldState":
        return replace(self, u=self.u.copy(), ut=self.ut.copy())


def _add_differences(out, src, axis, boundary):
    """out += (src[i+1] - src[i]) + (src[i-1] - src[i]) along ``axis``.

    Summing differences keeps the result exactly zero on constants.
    """
    n = src.ndim
    lo = [slice(None)] * n
    hi = [slice(None)] * n
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    lo, hi = tuple(lo), tuple(hi)
    d = src[hi] - src[lo]
    out[lo] += d
    out[hi] -= d
    if boundary is Boundary.PERIODIC:
        first = [slice(None)] * n
        last = [slice(None)] * n
        first[axis] = 0
        last[axis] = -1
        first, last = tuple(first), tuple(last)
        wrap = src[first] - src[last]
        out[last] += wrap
        out[first] -= wrap
    # Neumann: the mirrored ghost cell equals the boundary cell, difference 0


def laplacian_array(u: np.ndarray, grid: Grid) -> np.ndarray:
    """(2n+1)-point Laplacian of ``u`` with shape ``(k, *cells)``."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for comp in range(u.shape[0]):
        for ax in range(grid.dim):
            _add_differences(out[comp], u[comp], ax, grid.boundary)
    out /= grid.spacing ** 2
    return out


def laplacian(state: FieldState) -> np.ndarray:
    return laplacian_array(state.u, state.grid)


def gradient_array(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Central-difference gradient, shape ``(n, k, *cells)``.

    Neumann ends use the mirrored ghost, i.e. ``(u[1] - u[0]) / 2h``.
    """
    u = np.asarray(u, dtype=float)
    n = grid.dim
    out = np.empty((n, *u.shape))
    for ax in range(n):
        a = ax + 1  # skip the component axis
        if grid.boundary is Boundary.PERIODIC:
            out[ax] = np.roll(u, -1, axis=a) - np.roll(u, 1, axis=a)
        else:
            d = np.empty_like(u)
            sl = lambda s: tuple([slice(None)] * a + [s])  # noqa: E731
            d[sl(slice(1, -1))] = u[sl(slice(2, None))] - u[sl(slice(0, -2))]
            d[sl(0)] = u[sl(1)] - u[sl(0)]
            d[sl(-1)] = u[sl(-1)] - u[sl(-2)]
            out[ax] = d
    out /= 2.0 * grid.spacing
    return out


def gradient(state: FieldState) -> np.ndarray:
    return gradient_array(state.u, state.grid)


Profile = Callable[[np.ndarray], np.ndarray]


def _sample(func: Profile, grid: Grid, k: int, name: str) -> np.ndarray:
    x = grid.coords()
    vals = np.asarray(func(x), dtype=float)
    shape = (k, *grid.cells)
    if vals.shape == grid.cells and k == 1:
        vals = vals[None]
    vals = np.broadcast_to(vals, shape).astype(float, copy=True)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.argwhere(bad)[0]
        where = x[(slice(None), *idx[1:])]
        raise ValueError(f"{name} is not finite at x = {where.tolist()}")
    return vals


def init_from_profile(grid: Grid, k: int, epsilon: float, f: Profile, g: Profile | None = None,
                      time: float = 0.0) -> FieldState:
    """Sample initial data at the cell centres.

    ``f`` and ``g`` receive the coordinate array of shape ``(n, *cells)`` and
    return values of shape ``(k, *cells)`` (or ``cells`` when k=1).
    """
    u = _sample(f, grid, k, "initial field")
    if g is None:
        ut = np.zeros_like(u)
    else:
        ut = _sample(g, grid, k, "initial velocity")
    return FieldState(grid, k, epsilon, time, u, ut)


def vacuum(grid: Grid, k: int = 1, epsilon: float = 0.1) -> FieldState:
    u = np.zeros((k, *grid.cells))
    u[0] = 1.0
    return FieldState(grid, k, epsilon, 0.0, u, np.zeros_like(u))


def resolution_ok(grid: Grid, epsilon: float, points_per_width: float) -> bool:
    return grid.spacing <= epsilon / points_per_width * (1 + 1e-12)


__all__: Sequence[str] = [
    "Boundary", "Grid", "FieldState", "Potential", "c_k", "potential_eval", "potential_grad",
    "radial_potential", "laplacian", "laplacian_array", "gradient", "gradient_array",
    "init_from_profile", "vacuum", "resolution_ok",
]
