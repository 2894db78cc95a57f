"""Reference solvers for time-like minimal hypersurfaces.

Three independent routes to the motion law ``A = (1 - V^2) kappa``:

* the radial ODE for round circles/spheres,
* the (1+1)-dimensional minimal graph PDE,
* parametric front tracking of closed plane curves.

Sign convention, shared by all three: normals point outward and a convex
curve has negative curvature, so a sphere of radius ``r`` in ``R^n`` has
``kappa = -(n - 1) / r`` and the radial law reads
``r'' = -(1 - r'^2) (n - 1) / r``.

Graph equation
--------------
For a graph ``x = h(t, y)`` the Minkowski area is
``int sqrt(1 + h_y^2 - h_t^2) dt dy``. Writing ``L`` for the integrand, the
Euler-Lagrange equation ``d_t(h_t / L) - d_y(h_y / L) = 0`` multiplied by
``L^3`` gives::

    (1 + h_y^2) h_tt - 2 h_t h_y h_ty - (1 - h_t^2) h_yy = 0

The Lagrangian does not depend on ``t`` explicitly, so the Noether energy
``int (1 + h_y^2) / sqrt(1 + h_y^2 - h_t^2) dy`` is conserved. The area
density itself is not conserved in general (it is for null profiles
``f(y -/+ t)``, where it equals one pointwise).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline


class RefStatus(str, enum.Enum):
    OK = "ok"
    SINGULAR = "singular"


class SingularError(RuntimeError):
    """Raised by single-step routines when the geometry degenerates."""


# --- radial ODE -----------------------------------------------------------


def radial_rhs(r: float, rdot: float, n: int) -> tuple[float, float]:
    return rdot, -(1.0 - rdot * rdot) * (n - 1) / r


@dataclass
class RadialSolution:
    t: np.ndarray
    r: np.ndarray
    rdot: np.ndarray
    status: RefStatus
    t_star: float = math.inf

    def radius_at(self, t):
        """Cubic Hermite interpolation of the sampled radius."""
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.t, t) - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[i], self.t[i + 1]
        dt = t1 - t0
        s = (t - t0) / dt
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        return (h00 * self.r[i] + h10 * dt * self.rdot[i] + h01 * self.r[i + 1]
                + h11 * dt * self.rdot[i + 1])


def _rk4(r, v, dt, n):
    k1 = radial_rhs(r, v, n)
    k2 = radial_rhs(r + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1], n)
    k3 = radial_rhs(r + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1], n)
    k4 = radial_rhs(r + dt * k3[0], v + dt * k3[1], n)
    return (r + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            v + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


def radial_solve(r0: float, n: int, dt: float, t_end: float, rdot0: float = 0.0) -> RadialSolution:
    """Classic RK4 for the radial law with collapse detection.

    Integration halts with ``SINGULAR`` once ``r < 10 dt`` or
    ``1 - rdot^2 < 1e-6``; ``t_star`` is then extrapolated linearly from the
    last sample, ``t + r / |rdot|``.
    """
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    if not abs(rdot0) < 1:
        raise ValueError("|rdot0| must be < 1")
    steps = max(0, math.ceil(t_end / dt - 1e-9))
    ts = [0.0]
    rs = [float(r0)]
    vs = [float(rdot0)]
    r, v = float(r0), float(rdot0)
    status = RefStatus.OK
    t_star = math.inf
    for m in range(1, steps + 1):
        r, v = _rk4(r, v, dt, n)
        t = m * dt
        if not (r >= 10 * dt and 1 - v * v >= 1e-6) or not math.isfinite(r):
            status = RefStatus.SINGULAR
            if math.isfinite(r) and r > 0 and v < 0:
                ts.append(t)
                rs.append(r)
                vs.append(v)
                t_star = t + r / abs(v)
            else:
                t_star = ts[-1] + rs[-1] / max(abs(vs[-1]), 1e-300)
            break
        ts.append(t)
        rs.append(r)
        vs.append(v)
    return RadialSolution(np.array(ts), np.array(rs), np.array(vs), status, t_star)


# --- graph PDE ------------------------------------------------------------


@dataclass
class GraphState:
    """Periodic graph ``x = h(t, y)`` sampled at ``y_j = y0 + j dy``."""

    dy: float
    h: np.ndarray
    hdot: np.ndarray
    t: float = 0.0
    y0: float = 0.0
    status: RefStatus = RefStatus.OK

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.h.size)


def _dy(a, dy):
    return (np.roll(a, -1) - np.roll(a, 1)) / (2 * dy)


def _dyy(a, dy):
    return (np.roll(a, -1) - 2 * a + np.roll(a, 1)) / dy ** 2


def graph_area_element(state: GraphState) -> np.ndarray:
    """``1 - h_t^2 + h_y^2``; positive iff the graph is time-like."""
    hy = _dy(state.h, state.dy)
    return 1.0 - state.hdot ** 2 + hy ** 2


def graph_area(state: GraphState) -> float:
    return float(np.sqrt(graph_area_element(state)).sum() * state.dy)


def graph_energy(state: GraphState) -> float:
    """Conserved energy ``int (1 + h_y^2) / sqrt(1 + h_y^2 - h_t^2) dy``."""
    hy = _dy(state.h, state.dy)
    return float(((1.0 + hy ** 2) / np.sqrt(graph_area_element(state))).sum() * state.dy)


def _graph_accel(h, hdot, dy):
    hy = _dy(h, dy)
    hyy = _dyy(h, dy)
    hty = _dy(hdot, dy)
    return (2.0 * hdot * hy * hty + (1.0 - hdot ** 2) * hyy) / (1.0 + hy ** 2)


def graph_pde_step(state: GraphState, dt: float, iterations: int = 4) -> GraphState:
    """Kick-drift-kick step of the minimal graph equation.

    The first half-kick is implicit in the half-step velocity (solved by
    fixed-point iteration) and the second explicit, which keeps the scheme
    symmetric and second order despite the velocity-dependent acceleration.
    """
    if state.status is RefStatus.SINGULAR:
        return state
    h, v = state.h, state.hdot
    vh = v.copy()
    for _ in range(iterations):
        vh = v + 0.5 * dt * _graph_accel(h, vh, state.dy)
    hn = h + dt * vh
    vn = vh + 0.5 * dt * _graph_accel(hn, vh, state.dy)
    out = replace(state, h=hn, hdot=vn, t=state.t + dt)
    if not np.all(graph_area_element(out) > 0) or not np.all(np.isfinite(hn)):
        out.status = RefStatus.SINGULAR
    return out


def graph_solve(state: GraphState, dt: float, t_end: float) -> GraphState:
    steps = max(0, math.ceil((t_end - state.t) / dt - 1e-9))
    t0 = state.t
    for m in range(1, steps + 1):
        state = graph_pde_step(state, dt)
        state.t = t0 + m * dt
        if state.status is RefStatus.SINGULAR:
            break
    return state


# --- front tracking -------------------------------------------------------


@dataclass
class FrontCurve:
    """Closed counter-clockwise polyline with a scalar normal speed per vertex."""

    vertices: np.ndarray
    speed: np.ndarray
    t: float = 0.0
    status: RefStatus = RefStatus.OK
    reason: str = ""

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.speed = np.broadcast_to(np.asarray(self.speed, dtype=float), (len(self.vertices),)).copy()
        if signed_area(self.vertices) < 0:
            self.vertices = self.vertices[::-1].copy()
            self.speed = self.speed[::-1].copy()

    @classmethod
    def circle(cls, r0: float, m: int = 256, speed: float = 0.0, center=(0.0, 0.0)) -> "FrontCurve":
        th = 2 * np.pi * np.arange(m) / m
        v = np.stack([center[0] + r0 * np.cos(th), center[1] + r0 * np.sin(th)], axis=1)
        return cls(v, speed)

    @classmethod
    def ellipse(cls, a: float, b: float, m: int = 256, speed: float = 0.0) -> "FrontCurve":
        c = cls(np.stack([a * np.cos(2 * np.pi * np.arange(m) / m),
                          b * np.sin(2 * np.pi * np.arange(m) / m)], axis=1), speed)
        return redistribute(c)

    @property
    def mean_radius(self) -> float:
        return float(np.linalg.norm(self.vertices - self.vertices.mean(axis=0), axis=1).mean())

    @property
    def area(self) -> float:
        return signed_area(self.vertices)


def signed_area(x: np.ndarray) -> float:
    xs, ys = x[:, 0], x[:, 1]
    return 0.5 * float(np.sum(xs * np.roll(ys, -1) - np.roll(xs, -1) * ys))


def curvature_and_normal(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Circumscribed-circle curvature (convex < 0) and outward unit normals."""
    a = np.roll(x, 1, axis=0)
    c = np.roll(x, -1, axis=0)
    ab = x - a
    bc = c - x
    ac = c - a
    cross = ab[:, 0] * bc[:, 1] - ab[:, 1] * bc[:, 0]
    la = np.linalg.norm(ab, axis=1)
    lb = np.linalg.norm(bc, axis=1)
    lc = np.linalg.norm(ac, axis=1)
    kappa = -2.0 * cross / (la * lb * lc)
    normal = np.stack([ac[:, 1], -ac[:, 0]], axis=1) / lc[:, None]
    return kappa, normal


def redistribute(curve: FrontCurve) -> FrontCurve:
    """Resample to uniform arclength with periodic cubic splines.

    Vertex 0 keeps its position, so an already uniform polygon is unchanged
    up to rounding.
    """
    x = curve.vertices
    seg = np.linalg.norm(np.roll(x, -1, axis=0) - x, axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    m = len(x)
    closed = np.vstack([x, x[:1]])
    sp = np.concatenate([curve.speed, curve.speed[:1]])
    spline = CubicSpline(s, closed, bc_type="periodic", axis=0)
    vspline = CubicSpline(s, sp, bc_type="periodic")
    snew = total * np.arange(m) / m
    return replace(curve, vertices=spline(snew), speed=vspline(snew))


def _segments_intersect(x: np.ndarray) -> bool:
    m = len(x)
    p = x
    q = np.roll(x, -1, axis=0)
    d = q - p
    # pairwise non-adjacent segment tests
    i, j = np.triu_indices(m, k=2)
    keep = ~((i == 0) & (j == m - 1))
    i, j = i[keep], j[keep]
    r = d[i]
    s = d[j]
    qp = p[j] - p[i]
    den = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / den
        uu = (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / den
    hit = (den != 0) & (tt >= 0) & (tt <= 1) & (uu >= 0) & (uu <= 1)
    return bool(hit.any())


def _front_rhs(x, v):
    kappa, normal = curvature_and_normal(x)
    return v[:, None] * normal, (1.0 - v * v) * kappa


def front_track_step(curve: FrontCurve, dt: float, check_intersections: bool = True) -> FrontCurve:
    """RK4 step of ``dX/dt = V nu``, ``dV/dt = (1 - V^2) kappa`` plus redistribution."""
    if curve.status is RefStatus.SINGULAR:
        return curve
    x, v = curve.vertices, curve.speed
    k1 = _front_rhs(x, v)
    k2 = _front_rhs(x + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1])
    k3 = _front_rhs(x + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1])
    k4 = _front_rhs(x + dt * k3[0], v + dt * k3[1])
    xn = x + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    vn = v + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    out = FrontCurve.__new__(FrontCurve)
    out.vertices, out.speed, out.t, out.status, out.reason = xn, vn, curve.t + dt, curve.status, ""
    out = redistribute(out)
    spacing = np.linalg.norm(np.roll(out.vertices, -1, axis=0) - out.vertices, axis=1).mean()
    if not np.all(np.isfinite(out.vertices)):
        out.status, out.reason = RefStatus.SINGULAR, "non-finite vertices"
    elif np.abs(out.speed).max() >= 1 - 1e-6:
        out.status, out.reason = RefStatus.SINGULAR, "normal speed reached 1"
    elif out.area < (10 * spacing) ** 2:
        out.status, out.reason = RefStatus.SINGULAR, "enclosed area collapsed"
    elif check_intersections and _segments_intersect(out.vertices):
        out.status, out.reason = RefStatus.SINGULAR, "self-intersection"
    return out


def front_solve(curve: FrontCurve, dt: float, t_end: float, record_every: int = 1,
                check_intersections: bool = True) -> list[FrontCurve]:
    """Evolve to ``t_end`` (or until singular); returns recorded curves."""
    steps = max(0, math.ceil((t_end - curve.t) / dt - 1e-9))
    t0 = curve.t
    out = [curve]
    for m in range(1, steps + 1):
        curve = front_track_step(curve, dt, check_intersections)
        curve.t = t0 + m * dt
        if m % record_every == 0 or curve.status is RefStatus.SINGULAR or m == steps:
            out.append(curve)
        if curve.status is RefStatus.SINGULAR:
            break
    return out


def curve_to_csv(curves: list[FrontCurve], path) -> None:
    """Write ``t, vertex, x, y, speed`` rows."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "vertex", "x", "y", "speed"])
        for c in curves:
            for i, (p, v) in enumerate(zip(c.vertices, c.speed)):
                w.writerow([repr(c.t), i, repr(float(p[0])), repr(float(p[1])), repr(float(v))])


def graph_to_csv(states: list[GraphState], path) -> None:
    """Write ``t, y, h, hdot`` rows."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "y", "h", "hdot"])
        for s in states:
            for y, h, v in zip(s.y, s.h, s.hdot):
                w.writerow([repr(s.t), repr(float(y)), repr(float(h)), repr(float(v))])
