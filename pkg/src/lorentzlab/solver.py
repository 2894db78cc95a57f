"""Three-level leapfrog integration of ``u_tt - Lap u + grad W(u) / eps^2 = 0``."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from numba import njit

from .field import Boundary, FieldState, Grid, laplacian_array, potential_grad, resolution_ok

#: |u| above this is treated as blow-up.
BLOWUP = 10.0


class Status(str, enum.Enum):
    COMPLETED = "completed"
    DIVERGED = "diverged"
    MAX_STEPS = "max_steps"


class ResolutionError(ValueError):
    """Grid spacing does not resolve the transition layer."""


@dataclass(frozen=True)
class SolverConfig:
    t_end: float
    cfl_fraction: float = 0.5
    points_per_width: float = 4.0
    max_steps: int = 10_000_000
    observe_every: int = 1
    snapshot_every: int | None = None

    def __post_init__(self):
        if not 0.0 < self.cfl_fraction <= 1.0:
            raise ValueError("cfl_fraction must lie in (0, 1]")
        if self.points_per_width < 4.0:
            raise ValueError("points_per_width must be >= 4")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.observe_every < 1 or (self.snapshot_every is not None and self.snapshot_every < 1):
            raise ValueError("cadences must be positive")

    def validate(self, grid: Grid, epsilon: float) -> None:
        if not resolution_ok(grid, epsilon, self.points_per_width):
            raise ResolutionError(
                f"resolution rule h <= eps/points_per_width violated: h={grid.spacing:g}, "
                f"eps/{self.points_per_width:g}={epsilon / self.points_per_width:g}")


def stable_dt(grid: Grid, cfl_fraction: float) -> float:
    """``cfl_fraction * h / sqrt(n)`` for unit propagation speed."""
    if not 0.0 < cfl_fraction <= 1.0:
        raise ValueError("cfl_fraction must lie in (0, 1]")
    return cfl_fraction * grid.spacing / math.sqrt(grid.dim)


def _acceleration(u: np.ndarray, grid: Grid, epsilon: float) -> np.ndarray:
    return laplacian_array(u, grid) - potential_grad(None, u) / epsilon ** 2


def bootstrap_second_level(state0: FieldState, dt: float) -> np.ndarray:
    """Taylor start ``u1 = u0 + dt ut0 + dt^2/2 (Lap u0 - grad W(u0)/eps^2)``."""
    acc = _acceleration(state0.u, state0.grid, state0.epsilon)
    return state0.u + dt * state0.ut + 0.5 * dt * dt * acc


def step(u_prev: np.ndarray, u_curr: np.ndarray, dt: float, grid: Grid, epsilon: float) -> np.ndarray:
    """One leapfrog step, reference (numpy) implementation."""
    return 2.0 * u_curr - u_prev + dt * dt * _acceleration(u_curr, grid, epsilon)


# --- fused kernels --------------------------------------------------------


def _neighbours(n: int, boundary: Boundary):
    idx = np.arange(n)
    if boundary is Boundary.PERIODIC:
        return (idx + 1) % n, (idx - 1) % n
    return np.minimum(idx + 1, n - 1), np.maximum(idx - 1, 0)


@njit(cache=True)
def _kernel1(a, b, c, ip, im, inv_h2, dt2, inv_eps2):
    k, nx = b.shape
    umax = 0.0
    bad = False
    for i in range(nx):
        s = 0.0
        for q in range(k):
            s += b[q, i] * b[q, i]
        f = (1.0 - s) * inv_eps2
        for q in range(k):
            v = b[q, i]
            lap = (b[q, ip[i]] + b[q, im[i]] - 2.0 * v) * inv_h2
            nv = 2.0 * v - a[q, i] + dt2 * (lap + f * v)
            c[q, i] = nv
            if nv != nv:
                bad = True
            elif abs(nv) > umax:
                umax = abs(nv)
    return np.inf if bad else umax


@njit(cache=True)
def _kernel2(a, b, c, ipx, imx, ipy, imy, inv_h2, dt2, inv_eps2):
    k, nx, ny = b.shape
    umax = 0.0
    bad = False
    for i in range(nx):
        ii = ipx[i]
        jj = imx[i]
        for j in range(ny):
            s = 0.0
            for q in range(k):
                s += b[q, i, j] * b[q, i, j]
            f = (1.0 - s) * inv_eps2
            for q in range(k):
                v = b[q, i, j]
                lap = (b[q, ii, j] + b[q, jj, j] + b[q, i, ipy[j]] + b[q, i, imy[j]] - 4.0 * v) * inv_h2
                nv = 2.0 * v - a[q, i, j] + dt2 * (lap + f * v)
                c[q, i, j] = nv
                if nv != nv:
                    bad = True
                elif abs(nv) > umax:
                    umax = abs(nv)
    return np.inf if bad else umax


@njit(cache=True)
def _kernel3(a, b, c, ipx, imx, ipy, imy, ipz, imz, inv_h2, dt2, inv_eps2):
    k, nx, ny, nz = b.shape
    umax = 0.0
    bad = False
    for i in range(nx):
        for j in range(ny):
            for l in range(nz):
                s = 0.0
                for q in range(k):
                    s += b[q, i, j, l] * b[q, i, j, l]
                f = (1.0 - s) * inv_eps2
                for q in range(k):
                    v = b[q, i, j, l]
                    lap = (b[q, ipx[i], j, l] + b[q, imx[i], j, l] + b[q, i, ipy[j], l]
                           + b[q, i, imy[j], l] + b[q, i, j, ipz[l]] + b[q, i, j, imz[l]]
                           - 6.0 * v) * inv_h2
                    nv = 2.0 * v - a[q, i, j, l] + dt2 * (lap + f * v)
                    c[q, i, j, l] = nv
                    if nv != nv:
                        bad = True
                    elif abs(nv) > umax:
                        umax = abs(nv)
    return np.inf if bad else umax


class Leapfrog:
    """Holds two time levels and advances them with the fused kernel.

    ``prev`` is ``u^(m-1)`` and ``curr`` is ``u^m`` at ``time = t0 + m dt``.
    """

    def __init__(self, grid: Grid, k: int, epsilon: float, dt: float, prev: np.ndarray,
                 curr: np.ndarray, t0: float = 0.0, index: int = 1):
        self.grid = grid
        self.k = k
        self.epsilon = epsilon
        self.dt = float(dt)
        self.t0 = float(t0)
        self.index = int(index)
        shape = (k, *grid.cells)
        self.prev = np.ascontiguousarray(prev, dtype=float).reshape(shape).copy()
        self.curr = np.ascontiguousarray(curr, dtype=float).reshape(shape).copy()
        self._spare = np.empty(shape)
        nb = []
        for c in grid.cells:
            nb.extend(_neighbours(c, grid.boundary))
        self._nb = tuple(nb)
        self._kernel = (_kernel1, _kernel2, _kernel3)[grid.dim - 1]
        self._consts = (1.0 / grid.spacing ** 2, self.dt ** 2, 1.0 / epsilon ** 2)
        self.last_max = float(np.abs(self.curr).max())

    @classmethod
    def start(cls, state0: FieldState, dt: float) -> "Leapfrog":
        u1 = bootstrap_second_level(state0, dt)
        return cls(state0.grid, state0.k, state0.epsilon, dt, state0.u, u1, state0.time, 1)

    @property
    def time(self) -> float:
        return self.t0 + self.index * self.dt

    def peek_next(self) -> np.ndarray:
        """Compute ``u^(m+1)`` into the spare buffer without rotating."""
        self.last_max = float(self._kernel(self.prev, self.curr, self._spare, *self._nb, *self._consts))
        return self._spare

    def rotate(self) -> None:
        self.prev, self.curr, self._spare = self.curr, self._spare, self.prev
        self.index += 1

    def advance(self) -> bool:
        """Advance one step; False when the new level blew up."""
        self.peek_next()
        self.rotate()
        return self.last_max <= BLOWUP

    def reverse(self) -> None:
        """Swap the two levels, reversing the direction of time."""
        self.prev, self.curr = self.curr, self.prev
        self.dt = -self.dt
        self._consts = (self._consts[0], self.dt ** 2, self._consts[2])

    def state(self, next_level: np.ndarray) -> FieldState:
        """Snapshot at level m given ``u^(m+1)``; ``u_t`` is centred."""
        ut = (next_level - self.prev) / (2.0 * self.dt)
        return FieldState(self.grid, self.k, self.epsilon, self.time, self.curr.copy(), ut)


@dataclass
class Trajectory:
    states: list[FieldState] = field(default_factory=list)
    step_count: int = 0
    status: Status = Status.COMPLETED
    dt: float = 0.0
    integrator: Leapfrog | None = field(default=None, repr=False)

    @property
    def final(self) -> FieldState:
        return self.states[-1]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])


Observer = Callable[[FieldState, int], None]


def n_steps(t_end: float, dt: float) -> int:
    return max(0, math.ceil(t_end / dt - 1e-9))


def run(state0: FieldState, config: SolverConfig, observers: Iterable[Observer] = (),
        validate: bool = True, integrator: Leapfrog | None = None,
        hooks: Iterable[Callable[[Leapfrog], None]] = ()) -> Trajectory:
    """Integrate from ``state0`` to ``config.t_end``.

    Observers are called as ``obs(state, step_index)`` every
    ``config.observe_every`` steps (and at the first and last step); the same
    snapshot is stored when ``snapshot_every`` divides the index. The last
    state is always stored. ``integrator`` resumes from saved levels;
    ``hooks`` see the integrator after every completed step (checkpointing).
    """
    if validate:
        config.validate(state0.grid, state0.epsilon)
    observers = list(observers)
    hooks = list(hooks)
    dt = stable_dt(state0.grid, config.cfl_fraction)
    total = n_steps(config.t_end - state0.time, dt) if integrator is None else None
    traj = Trajectory(dt=dt)

    def emit(st: FieldState, m: int, last: bool) -> None:
        if m % config.observe_every == 0 or m == 0 or last:
            for obs in observers:
                obs(st, m)
        keep = last or m == 0 or (config.snapshot_every is not None and m % config.snapshot_every == 0)
        if keep and (not traj.states or traj.states[-1].time < st.time):
            traj.states.append(st)

    if integrator is None:
        if total == 0:
            emit(state0.copy(), 0, True)
            return traj
        lf = Leapfrog.start(state0, dt)
        emit(state0.copy(), 0, False)
    else:
        lf = integrator
        dt = lf.dt
        traj.dt = dt
        total = n_steps(config.t_end - lf.t0, dt)
    if lf.last_max > BLOWUP or not np.isfinite(lf.last_max):
        traj.status = Status.DIVERGED
        return traj

    while lf.index <= total:
        if lf.index > config.max_steps:
            traj.status = Status.MAX_STEPS
            if traj.states and traj.states[-1].time < lf.time:
                nxt = lf.peek_next()
                traj.states.append(lf.state(nxt))
            break
        m = lf.index
        nxt = lf.peek_next()
        ok = lf.last_max <= BLOWUP
        last = m == total or not ok
        needs_state = (m % config.observe_every == 0 and observers) or last or (
            config.snapshot_every is not None and m % config.snapshot_every == 0)
        if needs_state:
            emit(lf.state(nxt), m, last)
        lf.rotate()
        if not ok:
            traj.status = Status.DIVERGED
            break
        for hook in hooks:
            hook(lf)
    traj.step_count = lf.index - 1
    traj.integrator = lf
    return traj
