"""Initial data and reference comparisons for each scenario kind."""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .. import exact, minimal
from ..diagnostics import InterfaceSet
from ..field import Boundary, FieldState, Grid, vacuum
from .config import ConfigError, Scenario, validate
from .snapshot import read_snapshot


def _direction(s: Scenario, n: int) -> tuple[float, ...]:
    d = s["initial.direction"]
    return tuple(d) if d is not None else (1.0,) + (0.0,) * (n - 1)


def _center(s: Scenario, n: int) -> tuple[float, ...]:
    c = s["initial.center"]
    return tuple(c) if c is not None else (0.0,) * n


def ripple_curve(s: Scenario) -> np.ndarray:
    radius, _ = exact.ripple_radius(s["initial.r0"], s["initial.amplitude"], s["initial.wavelength"])
    return exact.polar_vertices(radius, 4096, _center(s, 2))


def graph_profile(s: Scenario, y: np.ndarray) -> np.ndarray:
    """``x = offset + a sin(2 pi m (y - lower) / L)`` for the graph scenario."""
    L = s["grid.upper"] - s["grid.lower"]
    return s["initial.offset"] + s["initial.amplitude"] * np.sin(
        2 * np.pi * s["initial.modes"] * (y - s["grid.lower"]) / L)


def _kink(s: Scenario, grid: Grid, t: float) -> FieldState:
    spec = exact.KinkSpec(s.epsilon, s["initial.speed"], _direction(s, grid.dim), s["initial.offset"])
    if grid.boundary is Boundary.PERIODIC:
        return exact.periodic_kink_state(grid, spec, t)
    return exact.kink_state(grid, spec, t)


def initial_state(s: Scenario) -> FieldState:
    kind = s.initial_kind
    eps = s.epsilon
    grid = s.grid
    if kind == "snapshot":
        st = read_snapshot(s["initial.path"], s["grid.boundary"])
        if abs(st.epsilon - eps) > 1e-15 or st.k != s.k:
            raise ConfigError(f"snapshot has eps={st.epsilon:g}, k={st.k}; config says eps={eps:g}, k={s.k}",
                              "snapshot")
        if st.grid.spacing > eps / s["solver.points_per_width"] * (1 + 1e-12):
            raise ConfigError("snapshot grid violates the resolution rule", "resolution")
        return st
    n = grid.dim
    if kind == "vacuum":
        return vacuum(grid, s.k, eps)
    if kind in ("kink", "planar_wave"):
        return _kink(s, grid, 0.0)
    if kind == "kink_pair":
        a, b = s["initial.positions"][:2]
        return exact.kink_pair_state(grid, eps, s["initial.speed"], a, b)
    if kind == "circle":
        return exact.circle_state(grid, eps, s["initial.r0"], _center(s, 2), s["initial.radial_speed"])
    if kind == "ellipse":
        a, b = s["initial.semi_axes"][:2]
        return exact.curve_state(grid, eps, exact.ellipse_vertices(a, b, 4096, _center(s, 2)))
    if kind == "ripples":
        if s["initial.amplitude"] == 0:
            return exact.circle_state(grid, eps, s["initial.r0"], _center(s, 2))
        return exact.curve_state(grid, eps, ripple_curve(s))
    if kind == "graph":
        x, y = grid.coords()
        h = graph_profile(s, y)
        L = grid.extent[0]
        # kink on the graph and a mirror antikink half a period away (periodic in x)
        xi = np.mod(x - h + 0.25 * L, L) - 0.25 * L
        u = np.where(xi < 0.25 * L, exact.kink_profile(xi / eps), -exact.kink_profile((xi - 0.5 * L) / eps))
        return FieldState(grid, 1, eps, 0.0, u[None], np.zeros_like(u)[None])
    if kind in ("vortex", "vortex_pair"):
        return exact.vortex_state(grid, eps, s["initial.centers"], s["initial.degrees"])
    if kind == "rotating_wave":
        spec = exact.RotatingWaveSpec(s["initial.omega"], eps, _direction(s, n), s["initial.offset"])
        return exact.rotating_wave_state(grid, spec)
    raise ConfigError(f"unknown initial kind {kind!r}", "initial-kind")


# --- references -----------------------------------------------------------


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point clouds."""
    if len(a) == 0 or len(b) == 0:
        return math.inf
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def _dense(vertices: np.ndarray, spacing: float, closed: bool = True) -> np.ndarray:
    """Polyline resampled so consecutive points are at most ``spacing`` apart."""
    out = []
    nxt = np.roll(vertices, -1, axis=0)
    segs = zip(vertices, nxt) if closed else zip(vertices[:-1], vertices[1:])
    for p, q in segs:
        m = max(1, math.ceil(np.linalg.norm(q - p) / spacing))
        t = np.arange(m)[:, None] / m
        out.append(p + t * (q - p))
    if not closed:
        out.append(vertices[-1:])
    return np.concatenate(out)


def _contour_points(iface: InterfaceSet, spacing: float) -> np.ndarray:
    """Contour polylines sampled at ``spacing`` (closed loops repeat their first vertex)."""
    if iface.contours:
        return np.concatenate([_dense(c, spacing, closed=False) for c in iface.contours if len(c) > 1])
    return iface.points


def equivalent_radius(iface: InterfaceSet, center) -> float:
    """Radius of the disc with the area enclosed by the longest contour.

    Unlike an average over contour vertices this does not depend on how
    marching squares spaces its points.
    """
    if not iface.contours:
        pts = iface.points
        return float(np.linalg.norm(pts - np.asarray(center), axis=1).mean()) if len(pts) else math.nan
    c = max(iface.contours, key=len)
    return math.sqrt(abs(minimal.signed_area(c)) / math.pi)


class Reference:
    """Base class; ``compare`` returns one row of named metrics."""

    columns: tuple[str, ...] = ()

    def compare(self, state: FieldState, iface: InterfaceSet | None) -> dict:
        raise NotImplementedError


class ExactReference(Reference):
    columns = ("field_linf", "interface_error")

    def __init__(self, s: Scenario):
        self.s = s
        self.kind = s.initial_kind

    def field(self, t: float, grid: Grid) -> np.ndarray:
        s, eps = self.s, self.s.epsilon
        n = grid.dim
        if self.kind in ("kink", "planar_wave"):
            return _kink(s, grid, t).u
        if self.kind == "kink_pair":
            a, b = s["initial.positions"][:2]
            return exact.kink_pair_state(grid, eps, s["initial.speed"], a, b, t).u
        if self.kind == "rotating_wave":
            spec = exact.RotatingWaveSpec(s["initial.omega"], eps, _direction(s, n), s["initial.offset"])
            return exact.rotating_wave_state(grid, spec, t).u
        return vacuum(grid, s.k, eps).u

    def compare(self, state, iface):
        err = float(np.abs(state.u - self.field(state.time, state.grid)).max())
        ie = math.nan
        if self.kind in ("kink", "planar_wave") and iface is not None and len(iface):
            nu = np.asarray(_direction(self.s, state.grid.dim))
            pos = self.s["initial.offset"] + self.s["initial.speed"] * state.time
            d = iface.points @ nu - pos
            if state.grid.boundary is Boundary.PERIODIC:
                # distance to the nearest of the kink and its mirror antikink
                L = state.grid.extent[int(np.argmax(np.abs(nu)))]
                d = np.mod(d + 0.25 * L, 0.5 * L) - 0.25 * L
            ie = float(np.abs(d).max())
        return {"field_linf": err, "interface_error": ie}


class RadialReference(Reference):
    """Circle radius from the radial ODE; for ripples the unperturbed circle."""

    columns = ("ref_radius", "hausdorff", "mean_deviation")

    def __init__(self, s: Scenario):
        self.s = s
        self.r0 = s["initial.r0"]
        self.center = np.asarray(_center(s, 2))
        dt = s["reference.dt"] or 1e-4 * self.r0
        self.sol = minimal.radial_solve(self.r0, 2, dt, s["solver.t_end"] * (1 + 1e-9) + dt,
                                        s["initial.radial_speed"])
        self.h = s.grid.spacing

    def radius(self, t: float) -> float:
        if t > self.sol.t[-1]:
            return math.nan
        return float(self.sol.radius_at(t))

    def compare(self, state, iface):
        r = self.radius(state.time)
        pts = _contour_points(iface, 0.25 * self.h)
        if not math.isfinite(r) or len(pts) == 0:
            return {"ref_radius": r, "hausdorff": math.nan, "mean_deviation": math.nan}
        m = max(64, math.ceil(2 * math.pi * r / (0.25 * self.h)))
        th = 2 * np.pi * np.arange(m) / m
        circ = self.center + r * np.stack([np.cos(th), np.sin(th)], axis=1)
        return {"ref_radius": r, "hausdorff": hausdorff(pts, circ),
                "mean_deviation": equivalent_radius(iface, self.center) - r}


class FrontReference(Reference):
    """Front-tracked curve advanced lazily to each requested time."""

    columns = ("ref_mean_radius", "hausdorff", "ref_singular")

    def __init__(self, s: Scenario, vertices: int = 512):
        self.s = s
        kind = s.initial_kind
        c = _center(s, 2)
        if kind == "circle":
            curve = minimal.FrontCurve.circle(s["initial.r0"], vertices, s["initial.radial_speed"], c)
        elif kind == "ellipse":
            a, b = s["initial.semi_axes"][:2]
            curve = minimal.FrontCurve(exact.ellipse_vertices(a, b, vertices, c), 0.0)
        else:
            radius, _ = exact.ripple_radius(s["initial.r0"], s["initial.amplitude"], s["initial.wavelength"])
            curve = minimal.FrontCurve(exact.polar_vertices(radius, vertices, c), 0.0)
        self.curve = minimal.redistribute(curve)
        spacing = 2 * math.pi * s["initial.r0"] / vertices
        self.dt = s["reference.dt"] or 0.25 * spacing
        self.h = s.grid.spacing
        self._steps = 0

    def advance(self, t: float) -> minimal.FrontCurve:
        c = self.curve
        while c.t < t - 1e-12 and c.status is minimal.RefStatus.OK:
            dt = min(self.dt, t - c.t)
            self._steps += 1
            c = minimal.front_track_step(c, dt, check_intersections=self._steps % 20 == 0)
        self.curve = c
        return c

    def compare(self, state, iface):
        c = self.advance(state.time)
        singular = c.status is not minimal.RefStatus.OK
        pts = _contour_points(iface, 0.25 * self.h)
        if singular or len(pts) == 0:
            return {"ref_mean_radius": c.mean_radius, "hausdorff": math.nan, "ref_singular": float(singular)}
        ref = _dense(c.vertices, 0.25 * self.h)
        return {"ref_mean_radius": c.mean_radius, "hausdorff": hausdorff(pts, ref), "ref_singular": 0.0}


class GraphReference(Reference):
    """Minimal graph ``x = h(t, y)`` evolved on the field's y-lattice."""

    columns = ("graph_linf", "ref_energy")

    def __init__(self, s: Scenario, refine: int = 1):
        self.s = s
        g = s.grid
        dy = g.spacing / refine
        y0 = g.origin[1] + 0.5 * g.spacing
        y = y0 + dy * np.arange(g.cells[1] * refine)
        self.state = minimal.GraphState(dy, graph_profile(s, y), np.zeros_like(y), 0.0, y0)
        self.dt = s["reference.dt"] or 0.25 * dy
        self.refine = refine

    def advance(self, t: float) -> minimal.GraphState:
        st = self.state
        while st.t < t - 1e-12 and st.status is minimal.RefStatus.OK:
            st = minimal.graph_pde_step(st, min(self.dt, t - st.t))
        self.state = st
        return st

    def compare(self, state, iface):
        st = self.advance(state.time)
        g = state.grid
        L = g.extent[0]
        pts = iface.points if iface is not None else np.zeros((0, 2))
        href = st.h[:: self.refine]
        j = np.clip(np.rint((pts[:, 1] - g.origin[1]) / g.spacing - 0.5).astype(int), 0, g.cells[1] - 1)
        # keep the crossings of the kink branch (nearest the graph modulo the period)
        dx = pts[:, 0] - href[j]
        dx = dx - L * np.round(dx / L)
        near = np.abs(dx) < 0.25 * L
        # only horizontal-edge crossings sit on the y lattice
        on_row = np.abs((pts[:, 1] - g.origin[1]) / g.spacing - 0.5 - j) < 1e-9
        sel = near & on_row
        err = float(np.abs(dx[sel]).max()) if sel.any() else math.nan
        return {"graph_linf": err, "ref_energy": minimal.graph_energy(st)}


def make_reference(s: Scenario) -> Reference | None:
    kind = s.reference
    if kind == "none":
        return None
    if kind == "exact":
        return ExactReference(s)
    if kind == "radial":
        return RadialReference(s)
    if kind == "front":
        return FrontReference(s)
    if kind == "graph":
        return GraphReference(s)
    raise ConfigError(f"unknown reference {kind!r}", "reference-kind")


# --- ripples --------------------------------------------------------------


def ripples_scenario(amplitude: float, wavelength: float, r0: float, *, epsilon: float | None = None,
                     cells: int = 1024, lower: float = -1.0, upper: float = 1.0, t_end: float | None = None,
                     name: str | None = None, **extra) -> Scenario:
    """Collapsing circle with a sinusoidal radial perturbation.

    Defaults: ``epsilon = wavelength / 4`` (the layer is thinner than a
    ripple), reference = radial ODE for the unperturbed circle, run to
    ``0.8 t*`` of that circle, cfl fraction 0.2. Ripple crests are bent
    on a scale comparable to epsilon, and the smaller step keeps the
    leapfrog energy error inside the conservation bound.
    """
    from .config import SCHEMA, REQUIRED

    vals = {k: (None if d is REQUIRED else d) for k, (_, d) in SCHEMA.items()}
    eps = epsilon if epsilon is not None else wavelength / 4.0
    vals.update({
        "name": name or f"ripples_l{wavelength:g}",
        "model.k": 1, "model.epsilon": float(eps),
        "grid.dim": 2, "grid.cells": int(cells), "grid.lower": float(lower), "grid.upper": float(upper),
        "grid.boundary": "neumann", "solver.cfl_fraction": 0.2,
        "solver.t_end": float(t_end if t_end is not None else 0.8 * 0.5 * math.pi * r0),
        "initial.kind": "ripples", "initial.r0": float(r0), "initial.amplitude": float(amplitude),
        "initial.wavelength": float(wavelength),
        "reference.kind": "radial",
        "outputs.interface_every": 10,
    })
    for k, v in extra.items():
        vals[k.replace("__", ".")] = v
    return validate(vals)


__all__ = ["initial_state", "make_reference", "hausdorff", "ripples_scenario", "Reference",
           "ExactReference", "RadialReference", "FrontReference", "GraphReference"]
