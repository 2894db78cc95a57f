"""Closed-form and semi-analytic reference solutions.

Kinks are built from ``q(s) = tanh(s / sqrt 2)``, the heteroclinic solution
of ``-q'' + W'(q) = 0`` for the quartic double well.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_bvp

from .field import FieldState, Grid, c_k

SQRT2 = math.sqrt(2.0)


class SingularityError(ValueError):
    """Requested time is at or past the collapse time."""

    def __init__(self, t_star: float):
        super().__init__(f"solution is singular for t >= t* = {t_star:.12g}")
        self.t_star = t_star


def kink_profile(s):
    return np.tanh(np.asarray(s, dtype=float) / SQRT2)


def kink_derivative(s):
    q = kink_profile(s)
    return (1.0 - q * q) / SQRT2


def kink_second_derivative(s):
    """``q'' = -q (1 - q^2) = W'(q)``."""
    q = kink_profile(s)
    return -q * (1.0 - q * q)


def sigma_quartic() -> float:
    """Surface tension ``int_{-1}^{1} sqrt(2 W(u)) du = 2 sqrt(2) / 3``."""
    return 2.0 * SQRT2 / 3.0


@dataclass(frozen=True)
class KinkSpec:
    """Planar kink ``q(gamma (x.nu - v t - x0) / eps)``."""

    epsilon: float
    speed: float = 0.0
    direction: tuple[float, ...] = (1.0,)
    offset: float = 0.0

    def __post_init__(self):
        nu = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
            raise ValueError("kink direction must be a unit vector")
        if not abs(self.speed) < 1.0:
            raise ValueError("kink speed must satisfy |v| < 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "direction", tuple(float(c) for c in nu))

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.speed ** 2)

    def argument(self, t, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        nu = np.asarray(self.direction).reshape((-1,) + (1,) * (x.ndim - 1))
        xn = np.sum(nu * x, axis=0)
        return self.gamma * (xn - self.speed * t - self.offset) / self.epsilon


def boosted_kink_field(spec: KinkSpec, t: float, x) -> tuple[np.ndarray, np.ndarray]:
    """Exact traveling kink and its time derivative.

    ``x`` has shape ``(n, ...)``; both outputs have shape ``x.shape[1:]``.
    """
    s = spec.argument(t, x)
    u = kink_profile(s)
    ut = -spec.speed * spec.gamma * kink_derivative(s) / spec.epsilon
    return u, ut


def kink_state(grid: Grid, spec: KinkSpec, t: float = 0.0) -> FieldState:
    u, ut = boosted_kink_field(spec, t, grid.coords())
    return FieldState(grid, 1, spec.epsilon, t, u[None], ut[None])


def periodic_kink_state(grid: Grid, spec: KinkSpec, t: float = 0.0) -> FieldState:
    """Kink at ``offset`` plus a mirror antikink half a period downstream.

    On a periodic grid a lone kink would leave a jump at the seam. Both
    layers are exact boosted profiles moving with ``speed``; their overlap
    is ``O(exp(-gamma L / (2 sqrt(2) eps)))``. ``direction`` must be a
    coordinate axis.
    """
    nu = np.asarray(spec.direction)
    axis = int(np.argmax(np.abs(nu)))
    if not np.isclose(abs(nu[axis]), 1.0):
        raise ValueError("periodic kinks need an axis-aligned direction")
    sign = float(np.sign(nu[axis]))
    L = grid.extent[axis]
    xn = sign * grid.coords()[axis]
    xi = np.mod(xn - spec.speed * t - spec.offset + 0.25 * L, L) - 0.25 * L
    g, e, v = spec.gamma, spec.epsilon, spec.speed
    first = xi < 0.25 * L
    s1 = g * xi / e
    s2 = g * (xi - 0.5 * L) / e
    u = np.where(first, kink_profile(s1), -kink_profile(s2))
    ut = np.where(first, -v * g * kink_derivative(s1) / e, v * g * kink_derivative(s2) / e)
    return FieldState(grid, 1, spec.epsilon, t, u[None], ut[None])


def kink_pair_state(grid: Grid, epsilon: float, speed: float, first: float, second: float,
                    t: float = 0.0) -> FieldState:
    """Kink at ``first`` and antikink at ``second`` co-moving with ``speed`` (1D, periodic)."""
    a = KinkSpec(epsilon, speed, (1.0,), first)
    b = KinkSpec(epsilon, speed, (1.0,), second)
    x = grid.coords()
    ua, uta = boosted_kink_field(a, t, x)
    ub, utb = boosted_kink_field(b, t, x)
    u = ua - ub - 1.0
    ut = uta - utb
    return FieldState(grid, 1, epsilon, t, u[None], ut[None])


def kink_energy(spec: KinkSpec) -> float:
    """Total energy per unit cross-section, ``gamma sigma``."""
    return spec.gamma * sigma_quartic()


def kink_lagrangian(spec: KinkSpec) -> float:
    """Total lagrangian per unit cross-section, ``sigma / gamma``."""
    return sigma_quartic() / spec.gamma


# --- rotating waves -------------------------------------------------------


@dataclass(frozen=True)
class RotatingWaveSpec:
    """``u = rho(x) e^{i omega t}`` with ``rho(x) = a f(a x)``, ``a = sqrt(1 + eps^2 omega^2)``.

    ``base_profile`` is a solution ``f`` of the scalar elliptic equation; the
    default is the planar kink along ``direction`` with ``abs_profile`` giving
    the non-negative ``|f|`` variant.
    """

    omega: float
    epsilon: float
    direction: tuple[float, ...] = (1.0,)
    offset: float = 0.0
    base_profile: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def amplitude(self) -> float:
        return math.sqrt(1.0 + (self.epsilon * self.omega) ** 2)

    def rho(self, x) -> np.ndarray:
        a = self.amplitude
        x = np.asarray(x, dtype=float)
        if self.base_profile is not None:
            return a * self.base_profile(a * x)
        nu = np.asarray(self.direction, dtype=float).reshape((-1,) + (1,) * (x.ndim - 1))
        xn = np.sum(nu * x, axis=0) - self.offset
        return a * kink_profile(a * xn / self.epsilon)


def rotated_potential_derivative(rho, epsilon: float, omega: float):
    """Derivative of ``W~_eps(rho) = (1 + eps^2 omega^2 - rho^2)^2 / 4``."""
    rho = np.asarray(rho, dtype=float)
    return -rho * (1.0 + (epsilon * omega) ** 2 - rho * rho)


def rotating_wave_field(spec: RotatingWaveSpec, t: float, x) -> tuple[np.ndarray, np.ndarray]:
    """``(u, u_t)`` with components stacked on axis 0 (shape ``(2, ...)``)."""
    rho = spec.rho(x)
    ph = spec.omega * t
    u = np.stack([rho * math.cos(ph), rho * math.sin(ph)])
    ut = spec.omega * np.stack([-rho * math.sin(ph), rho * math.cos(ph)])
    return u, ut


def rotating_wave_state(grid: Grid, spec: RotatingWaveSpec, t: float = 0.0) -> FieldState:
    u, ut = rotating_wave_field(spec, t, grid.coords())
    return FieldState(grid, 2, spec.epsilon, t, u, ut)


# --- vortex ---------------------------------------------------------------


def vortex_profile(s_max: float = 40.0, nodes: int = 2000):
    """Radial profile of the degree-one vortex in unit-width variables.

    Solves ``f'' + f'/s - f/s^2 + f (1 - f^2) = 0`` with ``f ~ s`` at the
    origin and ``f -> 1`` at infinity. Returns a vectorised interpolant.
    """
    s0 = 1e-4
    s = np.linspace(s0, s_max, nodes)

    def rhs(x, y):
        f, fp = y
        return np.vstack([fp, -fp / x + f / x ** 2 - f * (1.0 - f * f)])

    def bc(ya, yb):
        return np.array([ya[1] - ya[0] / s0, yb[0] - (1.0 - 0.5 / s_max ** 2)])

    guess = np.vstack([np.tanh(s / SQRT2), (1.0 - np.tanh(s / SQRT2) ** 2) / SQRT2])
    sol = solve_bvp(rhs, bc, s, guess, tol=1e-9, max_nodes=200000)
    if not sol.success:
        raise RuntimeError(f"vortex profile solve failed: {sol.message}")

    def f(r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inner = r < s0
        outer = r > s_max
        mid = ~(inner | outer)
        out[mid] = sol.sol(r[mid])[0]
        out[inner] = r[inner] * (sol.sol(s0)[0] / s0)
        out[outer] = 1.0 - 0.5 / r[outer] ** 2
        return out

    return f


def vortex_state(grid: Grid, epsilon: float, centers=((0.0, 0.0),), degrees=(1,),
                 profile=None) -> FieldState:
    """Product ansatz of radial vortex profiles at rest (n = 2, k = 2)."""
    if grid.dim != 2:
        raise ValueError("vortex states need a 2D grid")
    f = profile or vortex_profile()
    x, y = grid.coords()
    z = np.ones(grid.cells, dtype=complex)
    for (cx, cy), d in zip(centers, degrees):
        dx, dy = x - cx, y - cy
        r = np.hypot(dx, dy)
        th = np.arctan2(dy, dx)
        z *= f(r / epsilon) * np.exp(1j * d * th)
    u = np.stack([z.real, z.imag])
    return FieldState(grid, 2, epsilon, 0.0, u, np.zeros_like(u))


# --- pulsating circle / sphere --------------------------------------------


@dataclass(frozen=True)
class PulsatingSphereSpec:
    r0: float
    dim: int = 2

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")

    @property
    def t_star(self) -> float:
        if self.dim == 2:
            return 0.5 * math.pi * self.r0
        from .minimal import radial_solve

        return radial_solve(self.r0, 3, min(1e-4, self.r0 * 1e-4), 2.0 * self.r0).t_star


def pulsating_radius(spec: PulsatingSphereSpec, t: float) -> tuple[float, float, float]:
    """``(r, r', r'')`` of the collapsing circle/sphere released at rest."""
    t_star = spec.t_star
    if t >= t_star:
        raise SingularityError(t_star)
    if spec.dim == 2:
        r0 = spec.r0
        return r0 * math.cos(t / r0), -math.sin(t / r0), -math.cos(t / r0) / r0
    from .minimal import radial_rhs, radial_solve

    if t == 0:
        return spec.r0, 0.0, -2.0 / spec.r0
    steps = max(1, math.ceil(t / 1e-4))
    sol = radial_solve(spec.r0, 3, t / steps, t)
    r, rd = float(sol.r[-1]), float(sol.rdot[-1])
    if sol.t[-1] < t * (1 - 1e-12):
        raise SingularityError(sol.t_star)
    return r, rd, radial_rhs(r, rd, 3)[1]


def circle_state(grid: Grid, epsilon: float, r0: float, center=(0.0, 0.0), radial_speed: float = 0.0,
                 perturbation: Callable[[np.ndarray], np.ndarray] | None = None) -> FieldState:
    """Kink profile across a (possibly perturbed) circle, +1 outside.

    ``perturbation(theta)`` adds to the radius. A nonzero ``radial_speed``
    gives the boosted-kink velocity field of a uniformly moving front.
    """
    x, y = grid.coords()
    dx, dy = x - center[0], y - center[1]
    r = np.hypot(dx, dy)
    radius = r0
    if perturbation is not None:
        radius = r0 + perturbation(np.arctan2(dy, dx))
    spec = KinkSpec(epsilon, radial_speed, (1.0,), 0.0)
    s = spec.gamma * (r - radius) / epsilon
    u = kink_profile(s)
    ut = -radial_speed * spec.gamma * kink_derivative(s) / epsilon
    return FieldState(grid, 1, epsilon, 0.0, u[None], ut[None])


def polygon_signed_distance(points: np.ndarray, vertices: np.ndarray, refine: int = 8,
                            cutoff: float = np.inf) -> np.ndarray:
    """Signed distance to a closed polygon, positive outside.

    The polygon is resampled ``refine`` times more densely with a periodic
    spline; distances are to the two segments around the nearest sample,
    which is second-order accurate in the sample spacing for smooth curves.
    Points farther than ``cutoff`` from every sample get ``+-cutoff``; the
    sign is always exact.
    """
    from scipy.interpolate import CubicSpline
    from scipy.spatial import cKDTree

    v = np.asarray(vertices, dtype=float)
    seg = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    spline = CubicSpline(s, np.vstack([v, v[:1]]), bc_type="periodic", axis=0)
    dense = spline(np.linspace(0.0, s[-1], refine * len(v), endpoint=False))
    pts = np.asarray(points, dtype=float)
    m = len(dense)
    dist, j = cKDTree(dense).query(pts, distance_upper_bound=cutoff, workers=-1)
    near = np.isfinite(dist)
    d = np.full(len(pts), float(cutoff))
    pn, jn = pts[near], j[near]
    dn = np.full(len(pn), np.inf)
    for a, b in ((jn - 1) % m, jn), (jn, (jn + 1) % m):
        p, q = dense[a], dense[b]
        e = q - p
        t = np.clip(np.sum((pn - p) * e, axis=1) / np.sum(e * e, axis=1), 0.0, 1.0)
        dn = np.minimum(dn, np.linalg.norm(pn - p - t[:, None] * e, axis=1))
    d[near] = dn
    inside = _inside_even_odd(pts, dense)
    return np.where(inside, -d, d)


def _inside_even_odd(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule with one horizontal ray sweep per distinct ``y``.

    Grid points share few ``y`` values, so this costs about
    ``rows * vertices`` instead of ``points * vertices``.
    """
    p, q = poly, np.roll(poly, -1, axis=0)
    inside = np.zeros(len(pts), dtype=bool)
    ys, inv = np.unique(pts[:, 1], return_inverse=True)
    order = np.argsort(inv, kind="stable")
    bounds = np.searchsorted(inv[order], np.arange(len(ys) + 1))
    for i, y in enumerate(ys):
        # half-open span rule counts a vertex exactly once
        hit = (p[:, 1] <= y) != (q[:, 1] <= y)
        if not hit.any():
            continue
        a, b = p[hit], q[hit]
        xs = np.sort(a[:, 0] + (y - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1]))
        idx = order[bounds[i]:bounds[i + 1]]
        inside[idx] = np.searchsorted(xs, pts[idx, 0], side="right") % 2 == 1
    return inside


def curve_state(grid: Grid, epsilon: float, vertices: np.ndarray) -> FieldState:
    """Static kink profile across a closed curve (+1 outside), zero velocity."""
    if grid.dim != 2:
        raise ValueError("curve states need a 2D grid")
    x = grid.coords()
    pts = np.stack([x[0].ravel(), x[1].ravel()], axis=1)
    # q(s) rounds to exactly +-1 for |s| > 27
    d = polygon_signed_distance(pts, vertices, cutoff=30.0 * epsilon).reshape(grid.cells)
    u = kink_profile(d / epsilon)
    return FieldState(grid, 1, epsilon, 0.0, u[None], np.zeros_like(u)[None])


def ripple_radius(r0: float, amplitude: float, wavelength: float):
    """``R(theta) = r0 + a sin(m theta)`` with ``m = round(2 pi r0 / wavelength)``.

    Rounding the mode number keeps the curve closed; the arclength
    wavelength is then ``2 pi r0 / m``, within half a wavelength of the
    requested one over the whole circle.
    """
    m = max(1, round(2.0 * math.pi * r0 / wavelength))
    return lambda th: r0 + amplitude * np.sin(m * np.asarray(th, dtype=float)), m


def ellipse_vertices(a: float, b: float, m: int = 2048, center=(0.0, 0.0)) -> np.ndarray:
    th = 2 * np.pi * np.arange(m) / m
    return np.stack([center[0] + a * np.cos(th), center[1] + b * np.sin(th)], axis=1)


def polar_vertices(radius, m: int = 2048, center=(0.0, 0.0)) -> np.ndarray:
    th = 2 * np.pi * np.arange(m) / m
    r = radius(th)
    return np.stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)], axis=1)


# --- null graphs ----------------------------------------------------------


def null_graph_profile(f: Callable, t, y):
    """Right-moving graph ``h(t, y) = f(y - t)``: an exact time-like minimal graph."""
    return f(np.asarray(y, dtype=float) - t)


def energy_of_constant(k: int, epsilon: float, value: float, volume: float) -> float:
    """Total energy of a spatially constant state at rest."""
    w = 0.25 * (1.0 - value * value) ** 2
    return c_k(k, epsilon) * w / epsilon ** 2 * volume
