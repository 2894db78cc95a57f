"""Densities, stress-energy tensors, residuals and interface diagnostics.

All integrals are plain cell sums times ``h^n`` (and trapezoid weights in
time); numpy's pairwise summation keeps them deterministic.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .field import Boundary, FieldState, Grid, c_k, gradient_array, potential_eval
from .minkowski import CausalClass, SymTensor, causal_classify, eig_eta_selfadjoint, eta


class EmptyTubeError(ValueError):
    """No cells selected by the concentration mask."""


class InsufficientConcentrationError(ValueError):
    """Lagrangian mass inside the tube is too small to normalise by."""


class SupportError(ValueError):
    """A test field's support leaves the admissible region."""


# --- densities ------------------------------------------------------------


@dataclass
class DensityFields:
    """Per-cell rescaled energy ``e``, lagrangian ``l`` and potential ``w``."""

    e: np.ndarray
    l: np.ndarray
    w: np.ndarray
    time: float = 0.0
    grid: Grid | None = None

    def total(self, which: str = "e", mask=None) -> float:
        a = getattr(self, which)
        if mask is not None:
            a = a[mask]
        return float(np.sum(a)) * self.grid.cell_volume


@dataclass
class Derivatives:
    """First derivatives shared by densities and the stress tensor.

    ``grad`` holds central differences ``(n, k, *cells)``; ``sq`` holds the
    per-axis squared gradient ``(n, *cells)`` summed over components, either
    as the average of the two adjacent edge differences (the form the
    (2n+1)-point Laplacian conserves) or as squared central differences.
    """

    ut: np.ndarray
    grad: np.ndarray
    sq: np.ndarray

    @classmethod
    def analytic(cls, ut, grad) -> "Derivatives":
        ut = np.asarray(ut, dtype=float)
        grad = np.asarray(grad, dtype=float)
        return cls(ut, grad, np.sum(grad * grad, axis=1))


def _edge_squares(u: np.ndarray, grid: Grid) -> np.ndarray:
    out = np.zeros((grid.dim, *u.shape[1:]))
    h2 = grid.spacing ** 2
    for ax in range(grid.dim):
        a = ax + 1
        if grid.boundary is Boundary.PERIODIC:
            dp = (np.roll(u, -1, axis=a) - u) ** 2
            dm = np.roll(dp, 1, axis=a)
        else:
            d = np.diff(u, axis=a) ** 2
            pad = [(0, 0)] * u.ndim
            pad[a] = (0, 1)
            dp = np.pad(d, pad)
            pad[a] = (1, 0)
            dm = np.pad(d, pad)
        out[ax] = 0.5 * np.sum(dp + dm, axis=0) / h2
    return out


def derivatives(state: FieldState, squares: str = "edge") -> Derivatives:
    """Discrete derivatives of a snapshot; ``u_t`` is taken from the state."""
    grad = gradient_array(state.u, state.grid)
    if squares == "edge":
        sq = _edge_squares(state.u, state.grid)
    elif squares == "central":
        sq = np.sum(grad * grad, axis=1)
    else:
        raise ValueError(f"unknown squares mode {squares!r}")
    return Derivatives(state.ut, grad, sq)


def densities(state: FieldState, derivs: Derivatives | None = None) -> DensityFields:
    """``e``, ``l`` and ``w`` per cell (``derivs`` overrides the discrete ones)."""
    d = derivs or derivatives(state)
    ck = c_k(state.k, state.epsilon)
    kin = np.sum(d.ut * d.ut, axis=0)
    grad2 = np.sum(d.sq, axis=0)
    w = ck * potential_eval(state.potential, state.u) / state.epsilon ** 2
    e = 0.5 * ck * (kin + grad2) + w
    l = 0.5 * ck * (grad2 - kin) + w
    return DensityFields(e, l, w, state.time, state.grid)


def total_energy(state: FieldState) -> float:
    return densities(state).total("e")


def total_lagrangian(state: FieldState) -> float:
    return densities(state).total("l")


# --- stress-energy tensor -------------------------------------------------


class SymTensorField:
    """Per-cell symmetric tensors stored as upper-triangular components."""

    def __init__(self, n: int, packed: np.ndarray, grid: Grid | None = None, time: float = 0.0):
        self.n = n
        self.packed = packed
        self.grid = grid
        self.time = time
        self._index = {}
        for p, (a, b) in enumerate(zip(*np.triu_indices(n + 1))):
            self._index[(a, b)] = p
            self._index[(b, a)] = p

    def component(self, a: int, b: int) -> np.ndarray:
        return self.packed[self._index[(a, b)]]

    def full(self) -> np.ndarray:
        """Dense array of shape ``(n+1, n+1, *cells)``."""
        idx = np.array([[self._index[(a, b)] for b in range(self.n + 1)] for a in range(self.n + 1)])
        return self.packed[idx]

    def integrate(self, mask=None) -> np.ndarray:
        """Cell sum times ``h^n`` of every component; dense (n+1)x(n+1)."""
        comps = self.packed if mask is None else self.packed[:, mask]
        s = comps.reshape(comps.shape[0], -1).sum(axis=1) * self.grid.cell_volume
        return s[np.array([[self._index[(a, b)] for b in range(self.n + 1)] for a in range(self.n + 1)])]


def _spacetime_gradient(state: FieldState, derivs: Derivatives | None = None) -> np.ndarray:
    """``d_alpha u`` stacked as ``(n+1, k, *cells)`` with alpha = 0 the time."""
    d = derivs or derivatives(state)
    return np.concatenate([d.ut[None], d.grad], axis=0)


def stress_energy(state: FieldState, derivs: Derivatives | None = None) -> SymTensorField:
    """``T^{ab} = -c_k (eta du)^a . (eta du)^b + l eta^{ab}``.

    Diagonal spatial entries use the same squared gradients as
    :func:`densities`, so ``e = -T^{00}`` and the trace identity hold to
    rounding.
    """
    n = state.grid.dim
    d = derivs or derivatives(state)
    du = _spacetime_gradient(state, d)
    du[0] *= -1.0  # raise the index with eta = diag(-1, 1, ..., 1)
    ck = c_k(state.k, state.epsilon)
    l = densities(state, d).l
    iu = np.triu_indices(n + 1)
    packed = np.empty((len(iu[0]), *state.grid.cells))
    for p, (a, b) in enumerate(zip(*iu)):
        if a == b and a > 0:
            comp = l - ck * d.sq[a - 1]
        else:
            comp = -ck * np.sum(du[a] * du[b], axis=0)
            if a == b:
                comp -= l
        packed[p] = comp
    return SymTensorField(n, packed, state.grid, state.time)


def eta_trace(T: SymTensorField) -> np.ndarray:
    """``tr(eta T) = -T^{00} + sum_i T^{ii}`` per cell."""
    out = -T.component(0, 0).copy()
    for i in range(1, T.n + 1):
        out += T.component(i, i)
    return out


# --- divergence -----------------------------------------------------------


def _central_diff(a: np.ndarray, axis: int, grid: Grid) -> np.ndarray:
    h = grid.spacing
    if grid.boundary is Boundary.PERIODIC:
        return (np.roll(a, -1, axis=axis) - np.roll(a, 1, axis=axis)) / (2 * h)
    d = np.gradient(a, h, axis=axis, edge_order=1)
    return d


def divergence_residual(s0: FieldState, s1: FieldState, s2: FieldState) -> np.ndarray:
    """``d_b T^{ab}`` at the middle snapshot, shape ``(n+1, *cells)``."""
    T0, T1, T2 = stress_energy(s0), stress_energy(s1), stress_energy(s2)
    dt = s2.time - s0.time
    n = T1.n
    out = np.empty((n + 1, *s1.grid.cells))
    for a in range(n + 1):
        r = (T2.component(a, 0) - T0.component(a, 0)) / dt
        for i in range(1, n + 1):
            r = r + _central_diff(T1.component(a, i), i - 1, s1.grid)
        out[a] = r
    return out


def residual_norms(res: np.ndarray, grid: Grid, interior: int = 0) -> tuple[float, float]:
    """``(max, L2)`` over cells, optionally skipping ``interior`` boundary layers."""
    if interior:
        sl = (slice(None),) + (slice(interior, -interior),) * grid.dim
        res = res[sl]
    mag = np.sqrt(np.sum(res * res, axis=0))
    return float(mag.max()), float(np.sqrt(np.sum(mag * mag) * grid.cell_volume))


# --- stationarity ---------------------------------------------------------


def bump(s):
    """Smooth bump ``exp(1 - 1/(1 - s^2))`` on ``|s| < 1`` and its derivative."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1
    b = np.zeros_like(s)
    db = np.zeros_like(s)
    si = s[inside]
    one = 1.0 - si * si
    b[inside] = np.exp(1.0 - 1.0 / one)
    db[inside] = b[inside] * (-2.0 * si / one ** 2)
    return b, db


@dataclass(frozen=True)
class TestField:
    """``X = phi e_axis`` with ``phi`` a tensor-product bump in (t, x)."""

    __test__ = False  # not a pytest class

    center: tuple[float, ...]
    radius: float
    axis: int

    def support_ok(self, grid: Grid, t_lo: float, t_hi: float) -> bool:
        c = self.center
        r = self.radius
        if c[0] - r < t_lo - 1e-12 or c[0] + r > t_hi + 1e-12:
            return False
        if grid.boundary is Boundary.PERIODIC:
            return all(2 * r < e for e in grid.extent)
        margin = grid.spacing
        for xc, o, e in zip(c[1:], grid.origin, grid.extent):
            if xc - r < o + margin or xc + r > o + e - margin:
                return False
        return True


def default_test_fields(grid: Grid, t_window: tuple[float, float], centers: Sequence[Sequence[float]],
                        radius: float) -> list[TestField]:
    """One bump per centre (spatial point, time at mid-window) and per axis."""
    tc = 0.5 * (t_window[0] + t_window[1])
    out = []
    for c in centers:
        for axis in range(grid.dim + 1):
            out.append(TestField((tc, *map(float, c)), radius, axis))
    return out


def _window_indices(tf: TestField, grid: Grid, halo: int = 0) -> list[np.ndarray]:
    """Unwrapped cell indices covering the spatial support of ``tf`` per axis."""
    out = []
    for xc, o, n in zip(tf.center[1:], grid.origin, grid.cells):
        h = grid.spacing
        i0 = math.floor((xc - tf.radius - o) / h - 0.5) - halo
        i1 = math.ceil((xc + tf.radius - o) / h - 0.5) + 1 + halo
        pad = max(0, MIN_CROP - (i1 - i0))
        out.append(np.arange(i0 - pad // 2, i1 + pad - pad // 2))
    return out


MIN_CROP = 8


def _bump_window(tf: TestField, grid: Grid, t: float, halo: int = 1):
    """Bump factors on the window of ``tf`` padded by ``halo`` cells, or None.

    Indices are positions inside the padded crop built by :func:`_crop`.
    """
    bt, dbt = bump(np.array((t - tf.center[0]) / tf.radius))
    if bt == 0:
        return None
    factors = []
    for ax, idx in enumerate(_window_indices(tf, grid, halo)):
        x = grid.origin[ax] + (idx + 0.5) * grid.spacing
        b, db = bump((x - tf.center[1 + ax]) / tf.radius)
        factors.append((b, db / tf.radius))
    return float(bt), float(dbt) / tf.radius, factors


def _crop(state: FieldState, index: list[np.ndarray]) -> FieldState:
    """Sub-box of ``state`` (wrapped if periodic, clamped otherwise).

    The crop carries mirrored (Neumann) ends, so only its outermost cells
    see a different stencil from the full grid; callers pad by one cell.
    """
    grid = state.grid
    fixed = []
    for idx, n in zip(index, grid.cells):
        fixed.append(idx % n if grid.boundary is Boundary.PERIODIC else np.clip(idx, 0, n - 1))
    ix = np.ix_(*fixed)
    u = state.u[(slice(None), *ix)]
    ut = state.ut[(slice(None), *ix)]
    origin = tuple(o + idx[0] * grid.spacing for o, idx in zip(grid.origin, index))
    sub = Grid(tuple(len(i) for i in index), grid.spacing, origin, Boundary.NEUMANN)
    return FieldState(sub, state.k, state.epsilon, state.time, u, ut, state.potential)


def _stationarity_integrand(state: FieldState, mode: str) -> np.ndarray:
    """Dense ``M_a^b`` with ``M = eta T`` (tensor) or ``l P`` (varifold)."""
    n = state.grid.dim
    if mode == "tensor":
        T = stress_energy(state).full()
        T[0] *= -1.0  # lower the first index
        return T
    if mode != "varifold":
        raise ValueError(f"unknown mode {mode!r}")
    if state.k != 1:
        raise ValueError("varifold mode needs k = 1 (a single normal direction)")
    # l and P from the same central differences, so that l P - eta T is
    # exactly the discrepancy term and carries no extra truncation error
    d = derivatives(state, squares="central")
    du = _spacetime_gradient(state, d)[:, 0]
    raised = du.copy()
    raised[0] *= -1.0
    q = np.sum(du * raised, axis=0)
    l = densities(state, d).l
    safe = np.abs(q) > 1e-300
    inv = np.where(safe, 1.0 / np.where(safe, q, 1.0), 0.0)
    M = np.empty((n + 1, n + 1, *state.grid.cells))
    for a in range(n + 1):
        for b in range(n + 1):
            M[a, b] = -du[a] * raised[b] * inv * l
            if a == b:
                M[a, b] += l
    return M


class StationarityAccumulator:
    """Streaming form of :func:`stationarity_residual`, usable as an observer.

    Snapshots must arrive uniformly spaced in time and cover the time support
    of every test field (which is checked against ``t_window``). Because the
    bumps vanish at the ends of their support the trapezoid rule reduces to
    a plain sum times the spacing.
    """

    def __init__(self, grid: Grid, test_fields: Sequence[TestField], t_window: tuple[float, float],
                 mode: str = "tensor"):
        if mode not in ("tensor", "varifold"):
            raise ValueError(f"unknown mode {mode!r}")
        for tf in test_fields:
            if not tf.support_ok(grid, t_window[0], t_window[1]):
                raise SupportError(f"test field {tf} leaves the snapshot window or touches the boundary")
        self.grid = grid
        self.test_fields = list(test_fields)
        self.mode = mode
        self.t_window = t_window
        self._sums = np.zeros(len(self.test_fields))
        self._times: list[float] = []
        # fields sharing a support share the cropped integrand
        self._groups: dict[tuple, list[int]] = {}
        for j, tf in enumerate(self.test_fields):
            self._groups.setdefault((tf.center, tf.radius), []).append(j)

    def __call__(self, state: FieldState, step_index: int = 0) -> None:
        lo, hi = self.t_window
        tol = 1e-9 * max(1.0, abs(hi))
        if state.time < lo - tol or state.time > hi + tol:
            return
        if self._times and state.time <= self._times[-1]:
            return
        self._times.append(state.time)
        grid = self.grid
        for key, members in self._groups.items():
            win = _bump_window(self.test_fields[members[0]], grid, state.time)
            if win is None:
                continue
            bt, dbt, factors = win
            sub = _crop(state, _window_indices(self.test_fields[members[0]], grid, 1))
            M = _stationarity_integrand(sub, self.mode)
            # d_b phi for b = 0..n as outer products of the 1D factors
            spatial = factors[0][0]
            for f in factors[1:]:
                spatial = np.multiply.outer(spatial, f[0])
            grads = []
            for b in range(1, grid.dim + 1):
                g = None
                for ax, f in enumerate(factors):
                    term = f[1] if ax == b - 1 else f[0]
                    g = term if g is None else np.multiply.outer(g, term)
                grads.append(g)
            for j in members:
                a = self.test_fields[j].axis
                acc = np.sum(M[a, 0] * spatial) * dbt
                for b, g in enumerate(grads, start=1):
                    acc += np.sum(M[a, b] * g) * bt
                self._sums[j] += acc

    @property
    def result(self) -> np.ndarray:
        t = np.asarray(self._times)
        if t.size < 2:
            raise ValueError("need at least two snapshots")
        dts = np.diff(t)
        if not np.allclose(dts, dts[0], rtol=1e-6, atol=0):
            raise ValueError("snapshots must be uniformly spaced in time")
        lo, hi = self.t_window
        if t[0] - dts[0] > lo + 1e-9 or t[-1] + dts[0] < hi - 1e-9:
            raise SupportError("snapshots do not cover the test-field window")
        return self._sums * dts[0] * self.grid.cell_volume


def stationarity_residual(states: Sequence[FieldState], test_fields: Sequence[TestField],
                          mode: str = "tensor") -> np.ndarray:
    """Space-time quadrature of ``sum_b M_a^b d_b phi`` for each ``X = phi e_a``.

    ``mode="tensor"`` integrates the stress-energy tensor (exactly zero for
    solutions). ``mode="varifold"`` replaces ``eta T`` with ``l P`` where
    ``P`` is the lorentzian projection orthogonal to the field gradient, the
    first variation of the associated varifold.
    """
    if len(states) < 2:
        raise ValueError("need at least two snapshots")
    acc = StationarityAccumulator(states[0].grid, test_fields, (states[0].time, states[-1].time), mode)
    for s in states:
        acc(s)
    return acc.result


# --- equipartition --------------------------------------------------------


def tube_mask(grid: Grid, points, radius: float) -> np.ndarray:
    """Cells within euclidean ``radius`` of any of ``points`` (minimum image if periodic)."""
    x = grid.coords()
    mask = np.zeros(grid.cells, dtype=bool)
    for p in np.atleast_2d(points):
        d2 = np.zeros(grid.cells)
        for ax in range(grid.dim):
            dx = x[ax] - p[ax]
            if grid.boundary is Boundary.PERIODIC:
                L = grid.extent[ax]
                dx = dx - L * np.round(dx / L)
            d2 += dx * dx
        mask |= d2 <= radius * radius
    return mask


def equipartition_ratio(d: DensityFields, theta: float = 0.1, mask=None) -> float:
    """``sum w / sum l`` over the concentration tube.

    The tube is ``l > theta * max(l)`` unless an explicit boolean ``mask`` is
    given.
    """
    if mask is None:
        if not theta > 0:
            raise ValueError("theta must be positive")
        lmax = float(d.l.max())
        if not lmax > 0:
            raise EmptyTubeError("lagrangian density vanishes everywhere")
        mask = d.l > theta * lmax
    if not np.any(mask):
        raise EmptyTubeError("concentration tube is empty")
    return float(np.sum(d.w[mask]) / np.sum(d.l[mask]))


# --- interfaces -----------------------------------------------------------


@dataclass
class InterfaceSet:
    points: np.ndarray
    velocities: np.ndarray
    kind: str
    windings: np.ndarray | None = None
    contours: list[np.ndarray] = field(default_factory=list)
    time: float = 0.0

    def __len__(self):
        return len(self.points)


def _level_crossings(u: np.ndarray, grid: Grid) -> np.ndarray:
    pts = []
    x = grid.coords()
    h = grid.spacing
    for ax in range(grid.dim):
        a = u
        b = np.roll(u, -1, axis=ax)
        cross = (a * b < 0) | ((a == 0) & (b != 0))
        if grid.boundary is not Boundary.PERIODIC:
            edge = [slice(None)] * grid.dim
            edge[ax] = -1
            cross[tuple(edge)] = False
        idx = np.nonzero(cross)
        frac = a[idx] / (a[idx] - b[idx])
        p = np.stack([x[d][idx] for d in range(grid.dim)], axis=1)
        p[:, ax] += frac * h
        if grid.boundary is Boundary.PERIODIC:
            o, L = grid.origin[ax], grid.extent[ax]
            p[:, ax] = o + np.mod(p[:, ax] - o, L)
        pts.append(p)
    return np.concatenate(pts, axis=0) if pts else np.zeros((0, grid.dim))


def _contours(u: np.ndarray, grid: Grid) -> list[np.ndarray]:
    from skimage.measure import find_contours

    out = []
    for c in find_contours(u, 0.0):
        out.append(np.asarray(grid.origin) + (c + 0.5) * grid.spacing)
    return out


def _winding_plaquettes(u1: np.ndarray, u2: np.ndarray, grid: Grid):
    th = np.arctan2(u2, u1)
    periodic = grid.boundary is Boundary.PERIODIC

    def wrap(a):
        return (a + np.pi) % (2 * np.pi) - np.pi

    a = th
    b = np.roll(th, -1, axis=0)
    c = np.roll(b, -1, axis=1)
    d = np.roll(th, -1, axis=1)
    total = wrap(b - a) + wrap(c - b) + wrap(d - c) + wrap(a - d)
    wind = np.rint(total / (2 * np.pi)).astype(int)
    if not periodic:
        wind[-1, :] = 0
        wind[:, -1] = 0
    return wind


def _vortex_position(u1, u2, i, j, grid: Grid) -> np.ndarray:
    """Zero of the least-squares affine fit over the plaquette corners."""
    nx, ny = u1.shape
    ii = [i, (i + 1) % nx, (i + 1) % nx, i]
    jj = [j, j, (j + 1) % ny, (j + 1) % ny]
    loc = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    A = np.column_stack([np.ones(4), loc])
    c1 = np.linalg.lstsq(A, u1[ii, jj], rcond=None)[0]
    c2 = np.linalg.lstsq(A, u2[ii, jj], rcond=None)[0]
    J = np.array([c1[1:], c2[1:]])
    try:
        s = np.linalg.solve(J, -np.array([c1[0], c2[0]]))
    except np.linalg.LinAlgError:
        s = np.array([0.5, 0.5])
    s = np.clip(s, 0.0, 1.0)
    return np.asarray(grid.origin) + (np.array([i, j]) + 0.5 + s) * grid.spacing


def interface_extract(state: FieldState, previous: FieldState | None = None,
                      max_speed: float = 1.5) -> InterfaceSet:
    """Zero set of ``u`` (k=1) or vortex cores with winding numbers (k=2, n=2).

    With ``previous`` the velocity of each point is estimated: normal
    displacement ``u_prev(p) / |grad u_prev(p)|`` for level sets, nearest
    match within ``max_speed * dt`` for vortices (unmatched -> NaN).
    """
    grid = state.grid
    if state.k == 1:
        u = state.u[0]
        pts = _level_crossings(u, grid)
        contours = _contours(u, grid) if grid.dim == 2 else []
        vel = np.full_like(pts, np.nan)
        if previous is not None and len(pts):
            dt = state.time - previous.time
            vel = _normal_velocity(previous, pts, dt)
        return InterfaceSet(pts, vel, "LevelSet", None, contours, state.time)
    if grid.dim != 2:
        raise ValueError("vortex extraction is implemented for n = 2")
    wind = _winding_plaquettes(state.u[0], state.u[1], grid)
    idx = np.argwhere(wind != 0)
    pts = np.array([_vortex_position(state.u[0], state.u[1], i, j, grid) for i, j in idx]).reshape(-1, 2)
    windings = wind[tuple(idx.T)] if len(idx) else np.zeros(0, dtype=int)
    vel = np.full_like(pts, np.nan)
    if previous is not None and len(pts):
        prev = interface_extract(previous)
        dt = state.time - previous.time
        if len(prev):
            dist, j = cKDTree(prev.points).query(pts)
            ok = dist <= max_speed * abs(dt)
            vel[ok] = (pts[ok] - prev.points[j[ok]]) / dt
    return InterfaceSet(pts, vel, "Vortex", windings, [], state.time)


def _interp(a: np.ndarray, grid: Grid, pts: np.ndarray) -> np.ndarray:
    coords = (pts - np.asarray(grid.origin)) / grid.spacing - 0.5
    mode = "grid-wrap" if grid.boundary is Boundary.PERIODIC else "nearest"
    return ndimage.map_coordinates(a, coords.T, order=1, mode=mode)


def _normal_velocity(previous: FieldState, pts: np.ndarray, dt: float) -> np.ndarray:
    u = previous.u[0]
    g = gradient_array(previous.u, previous.grid)[:, 0]
    up = _interp(u, previous.grid, pts)
    gp = np.stack([_interp(g[ax], previous.grid, pts) for ax in range(previous.grid.dim)], axis=1)
    gn = np.linalg.norm(gp, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = gp / gn[:, None]
        disp = up / gn
    return (disp / dt)[:, None] * nu


def interface_to_csv(sets: Sequence[InterfaceSet], path) -> None:
    """Rows ``t, index, x..., v..., winding``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        n = sets[0].points.shape[1] if sets and sets[0].points.ndim == 2 and len(sets[0].points) else 2
        axes = "xyz"[:n]
        w.writerow(["t", "index", *axes, *(f"v{a}" for a in axes), "winding"])
        for s in sets:
            for i, p in enumerate(s.points):
                wn = int(s.windings[i]) if s.windings is not None else 0
                w.writerow([repr(s.time), i, *map(repr, map(float, p)),
                            *map(repr, map(float, s.velocities[i])), wn])


# --- projection -----------------------------------------------------------


@dataclass
class ProjectionReport:
    T_tilde: SymTensor
    eigenvalues: np.ndarray
    lambda0: float
    zero_count: int
    trace: float
    spacelike_ok: bool
    real_spectrum: bool = True
    tube_mass: float = 0.0

    def to_json(self) -> dict:
        return {
            "T_tilde": self.T_tilde.entries.tolist(),
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "lambda0": self.lambda0,
            "zero_count": self.zero_count,
            "trace": self.trace,
            "spacelike_ok": self.spacelike_ok,
            "real_spectrum": self.real_spectrum,
            "tube_mass": self.tube_mass,
        }


def _sample_directions(n: int, count: int = 100) -> np.ndarray:
    rng = np.random.default_rng(20240607)
    v = rng.normal(size=(count, n + 1))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def spacelike_check(M: np.ndarray, directions: np.ndarray, kernel_tol: float = 0.05,
                    tol_null: float = 1e-12) -> bool:
    """True when ``M xi`` is space-like for every sampled ``xi`` outside the kernel.

    Images shorter than ``kernel_tol * |M| * |xi|`` are treated as kernel
    directions; a rank-deficient tensor cannot map them anywhere else.
    """
    norm = float(np.linalg.norm(M, 2))
    if norm == 0:
        return False
    for xi in directions:
        v = M @ xi
        if np.linalg.norm(v) <= kernel_tol * norm * np.linalg.norm(xi):
            continue
        if causal_classify(v, tol_null) is not CausalClass.SpaceLike:
            return False
    return True


def projection_report(field_: SymTensorField, d: DensityFields, radius: float, point,
                      zero_tol: float = 0.05, min_mass: float = 1e-8, mask=None) -> ProjectionReport:
    """Tube average ``T~ = sum T / sum l`` around ``point`` and its eta-spectrum."""
    grid = field_.grid
    if radius < 3 * grid.spacing - 1e-15:
        raise ValueError("tube radius must be at least 3h")
    if mask is None:
        mask = tube_mask(grid, np.atleast_2d(point), radius)
    mass = d.total("l", mask)
    if not mass > min_mass:
        raise InsufficientConcentrationError(f"tube lagrangian mass {mass:g} <= {min_mass:g}")
    Tt = field_.integrate(mask) / mass
    Tt = 0.5 * (Tt + Tt.T)
    spec = eig_eta_selfadjoint(Tt)
    n = field_.n
    etaT = eta(n) @ Tt
    M = np.eye(n + 1) - etaT
    dirs = _sample_directions(n)
    w, vecs = np.linalg.eig(M)
    dirs = np.vstack([dirs, np.real(vecs).T])
    ok = spacelike_check(M, dirs, kernel_tol=zero_tol)
    vals = spec.values
    return ProjectionReport(
        T_tilde=SymTensor(Tt),
        eigenvalues=vals,
        lambda0=float(vals[0]),
        zero_count=int(np.sum(np.abs(vals) < zero_tol)),
        trace=float(np.trace(etaT)),
        spacelike_ok=bool(ok and spec.real),
        real_spectrum=spec.real,
        tube_mass=mass,
    )


# --- density ratio --------------------------------------------------------


def density_ratio_probe(window: Sequence[DensityFields], point, radii: Sequence[float], k: int) -> np.ndarray:
    """``l(B_rho(p)) / rho^(n+1-k)`` over euclidean space-time balls."""
    grid = window[0].grid
    times = np.array([d.time for d in window])
    if len(window) > 1:
        dts = np.diff(times)
        wts = np.empty(len(window))
        wts[1:-1] = 0.5 * (dts[1:] + dts[:-1])
        wts[0] = 0.5 * dts[0]
        wts[-1] = 0.5 * dts[-1]
    else:
        wts = np.ones(1)
    p = np.asarray(point, dtype=float)
    x = grid.coords()
    d2x = np.zeros(grid.cells)
    for ax in range(grid.dim):
        dx = x[ax] - p[1 + ax]
        if grid.boundary is Boundary.PERIODIC:
            L = grid.extent[ax]
            dx = dx - L * np.round(dx / L)
        d2x += dx * dx
    n = grid.dim
    out = []
    for rho in radii:
        total = 0.0
        for d, wt in zip(window, wts):
            r2 = rho * rho - (d.time - p[0]) ** 2
            if r2 < 0:
                continue
            total += wt * float(np.sum(d.l[d2x <= r2])) * grid.cell_volume
        out.append(total / rho ** (n + 1 - k))
    return np.array(out)


# --- observers ------------------------------------------------------------


SCALAR_COLUMNS = ["t", "energy", "lagrangian", "potential", "equipartition", "div_max", "div_l2"]


class ScalarLog:
    """Observer collecting per-step scalars; divergence uses consecutive snapshots.

    Rows are emitted one observation late so each row carries the residual
    centred on its own time (NaN at the two ends).
    """

    def __init__(self, theta: float = 0.1, residual: bool = True):
        self.theta = theta
        self.residual = residual
        self.rows: list[list[float]] = []
        self._hist: list[FieldState] = []
        self._pending: list[float] | None = None

    def __call__(self, state: FieldState, step_index: int) -> None:
        d = densities(state)
        try:
            ratio = equipartition_ratio(d, self.theta)
        except EmptyTubeError:
            ratio = math.nan
        row = [state.time, d.total("e"), d.total("l"), d.total("w"), ratio, math.nan, math.nan]
        if self.residual:
            self._hist.append(state)
            self._hist = self._hist[-3:]
            if len(self._hist) == 3 and self._pending is not None:
                res = divergence_residual(*self._hist)
                self._pending[5], self._pending[6] = residual_norms(res, state.grid, 1 if
                                                                    state.grid.boundary is Boundary.NEUMANN else 0)
        if self._pending is not None:
            self.rows.append(self._pending)
        self._pending = row

    def state_dict(self) -> dict:
        """Everything needed to continue bit-identically after a restart."""
        return {"rows": [list(r) for r in self.rows], "pending": self._pending,
                "hist": list(self._hist)}

    def load_state(self, d: dict) -> None:
        self.rows = [list(r) for r in d["rows"]]
        self._pending = None if d["pending"] is None else list(d["pending"])
        self._hist = list(d["hist"])

    def flush(self) -> None:
        if self._pending is not None:
            self.rows.append(self._pending)
            self._pending = None

    def array(self) -> np.ndarray:
        return np.array(self.rows + ([self._pending] if self._pending else []), dtype=float)

    def write_csv(self, path) -> None:
        self.flush()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SCALAR_COLUMNS)
            for r in self.rows:
                w.writerow([repr(float(v)) for v in r])


def write_projection_json(reports: Sequence[tuple[float, ProjectionReport]], path) -> None:
    with open(path, "w") as fh:
        json.dump([{"t": t, **r.to_json()} for t, r in reports], fh, indent=1)
