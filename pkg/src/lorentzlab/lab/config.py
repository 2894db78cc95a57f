"""Flat ``key = value`` scenario files.

Grammar (one entry per line)::

    line    := blank | "#" comment | key "=" value [ "#" comment ]
    key     := section "." name | "name"
    value   := scalar | scalar ("," scalar)* | tuple (";" tuple)*
    tuple   := scalar ("," scalar)*

Sections are ``model``, ``grid``, ``solver``, ``initial``, ``reference``,
``outputs`` and ``ripples``. Unknown keys are rejected. Every key has a
type and (except the required ones) a default; :func:`resolved_text`
prints the full resolved set back in the same grammar so a run can be
repeated from its output directory alone.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from ..field import Boundary, Grid, MIN_CELLS
from ..solver import SolverConfig


class ConfigError(ValueError):
    """Invalid scenario file; ``rule`` names the violated constraint."""

    def __init__(self, message: str, rule: str = "syntax"):
        super().__init__(f"[{rule}] {message}")
        self.rule = rule


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _points(text: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(p) for p in text.split(";") if p.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _str(text: str) -> str:
    return text.strip()


REQUIRED = object()

# key -> (parser, default); None means "not set"
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "name": (_str, REQUIRED),
    "model.k": (int, 1),
    "model.epsilon": (float, None),
    "model.epsilon_list": (_floats, None),
    "model.potential": (_str, "quartic"),
    "grid.dim": (int, 1),
    "grid.cells": (int, None),
    "grid.cells_list": (_ints, None),
    "grid.lower": (float, -1.0),
    "grid.upper": (float, 1.0),
    "grid.boundary": (_str, "periodic"),
    "solver.t_end": (float, REQUIRED),
    "solver.cfl_fraction": (float, 0.5),
    "solver.points_per_width": (float, 4.0),
    "solver.max_steps": (int, 10_000_000),
    "initial.kind": (_str, REQUIRED),
    "initial.speed": (float, 0.0),
    "initial.direction": (_floats, None),
    "initial.offset": (float, 0.0),
    "initial.positions": (_floats, (-0.5, 0.5)),
    "initial.r0": (float, 0.6),
    "initial.center": (_floats, None),
    "initial.radial_speed": (float, 0.0),
    "initial.semi_axes": (_floats, (0.6, 0.4)),
    "initial.amplitude": (float, 0.0),
    "initial.wavelength": (float, None),
    "initial.modes": (int, 1),
    "initial.centers": (_points, ((0.0, 0.0),)),
    "initial.degrees": (_ints, (1,)),
    "initial.omega": (float, 1.0),
    "initial.path": (_str, None),
    "reference.kind": (_str, "none"),
    "reference.dt": (float, None),
    "outputs.dir": (_str, None),
    "outputs.observe_every": (int, 10),
    "outputs.snapshot_every": (int, 0),
    "outputs.interface_every": (int, 0),
    "outputs.projection_every": (int, 0),
    "outputs.projection_radius": (float, 0.0),
    "outputs.checkpoint_every": (int, 0),
    "outputs.theta": (float, 0.1),
    "outputs.tube_radius": (float, 0.0),
    "outputs.residual": (_bool, True),
    "outputs.stationarity": (_bool, False),
    "outputs.test_radius": (float, 0.2),
    "outputs.test_time": (float, None),
    "outputs.test_points": (int, 8),
    "ripples.wavelength_list": (_floats, None),
    "ripples.ratio": (float, 0.2),
}

INITIAL_KINDS = ("kink", "kink_pair", "planar_wave", "circle", "ellipse", "ripples", "graph",
                 "vortex", "vortex_pair", "rotating_wave", "snapshot", "vacuum")
REFERENCE_KINDS = ("none", "exact", "radial", "front", "graph")
_REFERENCE_OK = {
    "exact": ("kink", "planar_wave", "kink_pair", "rotating_wave", "vacuum"),
    "radial": ("circle", "ripples"),
    "front": ("circle", "ellipse", "ripples"),
    "graph": ("graph",),
}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(_format(v) for v in value)
        return ", ".join(_format(v) for v in value)
    return str(value)


@dataclass
class Scenario:
    """Validated experiment description; ``values`` is the flat resolved map."""

    values: dict[str, Any]
    source: str = "<memory>"
    grid: Grid | None = field(default=None, repr=False)

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def name(self) -> str:
        return self.values["name"]

    @property
    def k(self) -> int:
        return self.values["model.k"]

    @property
    def epsilon(self) -> float | None:
        return self.values["model.epsilon"]

    @property
    def epsilon_list(self) -> tuple[float, ...] | None:
        return self.values["model.epsilon_list"]

    @property
    def is_convergence(self) -> bool:
        return self.epsilon_list is not None

    @property
    def initial_kind(self) -> str:
        return self.values["initial.kind"]

    @property
    def reference(self) -> str:
        return self.values["reference.kind"]

    @property
    def solver(self) -> SolverConfig:
        v = self.values
        return SolverConfig(
            t_end=v["solver.t_end"], cfl_fraction=v["solver.cfl_fraction"],
            points_per_width=v["solver.points_per_width"], max_steps=v["solver.max_steps"],
            observe_every=v["outputs.observe_every"],
        )

    @property
    def output_dir(self) -> Path:
        return Path(self.values["outputs.dir"])

    def with_values(self, **updates) -> "Scenario":
        """Copy with dotted keys replaced (``model__epsilon=0.04`` style)."""
        vals = dict(self.values)
        for key, val in updates.items():
            vals[key.replace("__", ".")] = val
        return validate(vals, self.source)


def resolved_text(s: Scenario) -> str:
    lines = [f"{k} = {_format(v)}" for k, v in sorted(s.values.items()) if v is not None]
    return "\n".join(lines) + "\n"


def config_hash(s: Scenario) -> str:
    return hashlib.sha256(resolved_text(s).encode()).hexdigest()


def parse_text(text: str, source: str = "<string>") -> Scenario:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (p.strip() for p in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}", "unknown-key")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}", "duplicate-key")
        raw[key] = val
    vals: dict[str, Any] = {}
    for key, (parse, default) in SCHEMA.items():
        if key in raw:
            try:
                vals[key] = parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key}: {exc}", "type") from None
        elif default is REQUIRED:
            raise ConfigError(f"{source}: missing required key {key!r}", "required")
        else:
            vals[key] = default
    return validate(vals, source)


def parse_config(path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}", "missing-file")
    return parse_text(path.read_text(), str(path))


def _grid_from(vals: dict) -> Grid:
    n = vals["grid.dim"]
    lo, hi = vals["grid.lower"], vals["grid.upper"]
    return Grid.box([lo] * n, [hi] * n, vals["grid.cells"], Boundary(vals["grid.boundary"]))


def _clearance(vals: dict, grid: Grid) -> float | None:
    """Smallest distance from the initial interface to a non-periodic wall
    over the run, or None when the scenario has no bounded interface model."""
    kind = vals["initial.kind"]
    t_end = vals["solver.t_end"]
    lo, hi = vals["grid.lower"], vals["grid.upper"]
    c = vals["initial.center"] or (0.0,) * grid.dim
    if kind in ("circle", "ripples"):
        r0 = vals["initial.r0"] + abs(vals["initial.amplitude"])
        # released at rest the circle only shrinks; a moving one is bounded by the light cone
        grow = t_end if vals["initial.radial_speed"] > 0 else 0.0
        if vals["reference.kind"] not in ("radial", "front"):
            grow = t_end
        return min(min(ci - r0 - lo, hi - ci - r0) for ci in c[:2]) - grow
    if kind == "ellipse":
        a = max(vals["initial.semi_axes"])
        grow = 0.0 if vals["reference.kind"] == "front" else t_end
        return min(min(ci - a - lo, hi - ci - a) for ci in c[:2]) - grow
    if kind in ("kink", "planar_wave"):
        off = vals["initial.offset"]
        return min(off - lo, hi - off) - t_end
    if kind in ("vortex", "vortex_pair"):
        pts = vals["initial.centers"]
        return min(min(p - lo, hi - p) for q in pts for p in q) - t_end
    return None


def validate(vals: dict, source: str = "<memory>") -> Scenario:
    vals = dict(vals)
    if vals.get("initial.kind") not in INITIAL_KINDS:
        raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}", "initial-kind")
    if vals.get("reference.kind") not in REFERENCE_KINDS:
        raise ConfigError(f"reference.kind must be one of {REFERENCE_KINDS}", "reference-kind")
    ref = vals["reference.kind"]
    if ref != "none" and vals["initial.kind"] not in _REFERENCE_OK[ref]:
        raise ConfigError(f"reference {ref!r} does not apply to initial.kind {vals['initial.kind']!r}",
                          "reference-kind")
    if vals["model.k"] not in (1, 2):
        raise ConfigError("model.k must be 1 or 2", "model-k")
    if vals["model.potential"] != "quartic":
        raise ConfigError("only the quartic potential is available", "potential")
    if (vals["model.epsilon"] is None) == (vals["model.epsilon_list"] is None):
        raise ConfigError("give exactly one of model.epsilon and model.epsilon_list", "epsilon")
    epsilons = [vals["model.epsilon"]] if vals["model.epsilon"] is not None else list(vals["model.epsilon_list"])
    if vals["model.epsilon_list"] is not None and len(epsilons) < 3:
        raise ConfigError("a convergence study needs at least 3 epsilons", "epsilon-list")
    for e in epsilons:
        if not 0.0 < e < 1.0:
            raise ConfigError(f"epsilon {e} outside (0, 1)", "epsilon")
    if vals["initial.kind"] in ("vortex", "vortex_pair", "rotating_wave") and vals["model.k"] != 2:
        raise ConfigError(f"{vals['initial.kind']} needs model.k = 2", "model-k")
    if vals["initial.kind"] in ("kink", "kink_pair", "planar_wave", "circle", "ellipse", "ripples",
                                "graph") and vals["model.k"] != 1:
        raise ConfigError(f"{vals['initial.kind']} needs model.k = 1", "model-k")
    try:
        SolverConfig(vals["solver.t_end"], vals["solver.cfl_fraction"], vals["solver.points_per_width"],
                     vals["solver.max_steps"], max(1, vals["outputs.observe_every"]))
    except ValueError as exc:
        raise ConfigError(str(exc), "solver") from None
    for key in ("outputs.observe_every",):
        if vals[key] < 1:
            raise ConfigError(f"{key} must be >= 1", "cadence")
    for key in ("outputs.snapshot_every", "outputs.interface_every", "outputs.projection_every",
                "outputs.checkpoint_every"):
        if vals[key] < 0:
            raise ConfigError(f"{key} must be >= 0", "cadence")
        if vals[key] and vals[key] % vals["outputs.observe_every"]:
            raise ConfigError(f"{key} must be a multiple of outputs.observe_every", "cadence")
    if vals["reference.kind"] != "none" and vals["outputs.interface_every"] == 0:
        # references compare against the extracted interface
        vals["outputs.interface_every"] = vals["outputs.observe_every"]
    if vals["outputs.dir"] is None:
        vals["outputs.dir"] = str(Path("out") / vals["name"])

    grid = None
    if vals["initial.kind"] == "snapshot":
        if not vals["initial.path"]:
            raise ConfigError("initial.kind = snapshot needs initial.path", "snapshot")
    else:
        if vals["grid.cells"] is None:
            raise ConfigError("missing required key 'grid.cells'", "required")
        if not 1 <= vals["grid.dim"] <= 3:
            raise ConfigError("grid.dim must be 1, 2 or 3", "grid")
        if vals["grid.cells"] < MIN_CELLS:
            raise ConfigError(f"grid.cells must be >= {MIN_CELLS}", "grid")
        if not vals["grid.upper"] > vals["grid.lower"]:
            raise ConfigError("grid.upper must exceed grid.lower", "grid")
        try:
            Boundary(vals["grid.boundary"])
        except ValueError:
            raise ConfigError("grid.boundary must be periodic or neumann", "grid") from None
        grid = _grid_from(vals)
        ppw = vals["solver.points_per_width"]
        cells_list = vals["grid.cells_list"]
        if cells_list is not None and (vals["model.epsilon_list"] is None or len(cells_list) != len(epsilons)):
            raise ConfigError("grid.cells_list pairs with model.epsilon_list (equal lengths)", "cells-list")
        if cells_list is not None and min(cells_list) < MIN_CELLS:
            raise ConfigError(f"grid.cells_list entries must be >= {MIN_CELLS}", "grid")
        for i, e in enumerate(epsilons):
            h = grid.spacing if cells_list is None else (vals["grid.upper"] - vals["grid.lower"]) / cells_list[i]
            if h > e / ppw * (1 + 1e-12):
                raise ConfigError(f"h = {h:g} exceeds eps/points_per_width = {e / ppw:g} "
                                  f"for eps = {e:g}", "resolution")
        _check_initial(vals, grid)
        if grid.boundary is Boundary.NEUMANN:
            clear = _clearance(vals, grid)
            ext = vals["grid.upper"] - vals["grid.lower"]
            if clear is not None and clear < 0.1 * ext - 1e-12:
                raise ConfigError(f"interface comes within {clear:g} of a wall by t_end "
                                  f"(needs >= {0.1 * ext:g})", "boundary-clearance")
    return Scenario(vals, source, grid)


def _check_initial(vals: dict, grid: Grid) -> None:
    kind = vals["initial.kind"]
    n = grid.dim
    if not abs(vals["initial.speed"]) < 1 or not abs(vals["initial.radial_speed"]) < 1:
        raise ConfigError("speeds must be subluminal", "speed")
    if vals["initial.direction"] is not None:
        d = vals["initial.direction"]
        if len(d) != n or abs(math.hypot(*d) - 1.0) > 1e-9:
            raise ConfigError("initial.direction must be a unit vector of length grid.dim", "direction")
    if kind in ("kink", "planar_wave") and grid.boundary is Boundary.PERIODIC and vals["initial.direction"]:
        if sorted(abs(c) for c in vals["initial.direction"])[-1] != 1.0:
            raise ConfigError("periodic kinks need an axis-aligned initial.direction", "direction")
    if vals["initial.center"] is not None and len(vals["initial.center"]) != n:
        raise ConfigError("initial.center must have grid.dim entries", "center")
    if kind in ("circle", "ellipse", "ripples", "vortex", "vortex_pair", "graph") and n != 2:
        raise ConfigError(f"{kind} needs grid.dim = 2", "grid")
    if kind == "kink_pair" and (n != 1 or grid.boundary is not Boundary.PERIODIC):
        raise ConfigError("kink_pair needs a periodic 1D grid", "grid")
    if kind == "graph" and grid.boundary is not Boundary.PERIODIC:
        raise ConfigError("graph scenarios need a periodic grid", "grid")
    if kind == "vortex_pair" and len(vals["initial.centers"]) != len(vals["initial.degrees"]):
        raise ConfigError("initial.centers and initial.degrees differ in length", "vortex")
    if vals["ripples.wavelength_list"] is not None:
        if kind != "ripples":
            raise ConfigError("ripples.wavelength_list needs initial.kind = ripples", "ripples")
        eps_list = vals["model.epsilon_list"]
        if eps_list is None or len(eps_list) != len(vals["ripples.wavelength_list"]):
            raise ConfigError("a ripple study pairs model.epsilon_list with ripples.wavelength_list "
                              "(equal lengths)", "ripples")
    if kind == "ripples":
        a, lam, r0 = vals["initial.amplitude"], vals["initial.wavelength"], vals["initial.r0"]
        lams = vals["ripples.wavelength_list"] or ((lam,) if lam else ())
        if not lams:
            raise ConfigError("ripples need initial.wavelength or ripples.wavelength_list", "ripples")
        cells_list = vals["grid.cells_list"]
        for i, lam in enumerate(lams):
            amp = a if vals["ripples.wavelength_list"] is None else vals["ripples.ratio"] * lam
            h = grid.spacing if cells_list is None else (vals["grid.upper"] - vals["grid.lower"]) / cells_list[i]
            if not (amp < lam < r0):
                raise ConfigError(f"ripples need a < wavelength < r0 (a={amp:g}, wavelength={lam:g})",
                                  "ripples")
            if lam / h < 16 - 1e-9:
                raise ConfigError(f"wavelength {lam:g} resolved by fewer than 16 cells", "ripple-resolution")


def member(s: Scenario, epsilon: float, tag: str | None = None, **updates) -> Scenario:
    """Single-epsilon member of a convergence scenario."""
    vals = dict(s.values)
    vals["model.epsilon"] = float(epsilon)
    vals["model.epsilon_list"] = None
    vals["ripples.wavelength_list"] = None
    if s.values["grid.cells_list"] is not None and "grid__cells" not in updates:
        vals["grid.cells"] = s.values["grid.cells_list"][list(s.epsilon_list).index(epsilon)]
    vals["grid.cells_list"] = None
    for key, val in updates.items():
        vals[key.replace("__", ".")] = val
    vals["outputs.dir"] = str(Path(s.values["outputs.dir"]) / (tag or f"eps_{epsilon:g}"))
    return validate(vals, s.source)


__all__ = ["ConfigError", "Scenario", "SCHEMA", "parse_config", "parse_text", "validate",
           "resolved_text", "config_hash", "member"]
