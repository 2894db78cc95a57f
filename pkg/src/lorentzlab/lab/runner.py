"""Run a scenario with its observers, write artifacts, checkpoint and resume.

Output directory layout::

    resolved.cfg        every key, defaults included (re-runnable as is)
    scalars.csv         t, energy, lagrangian, potential, equipartition,
                        div_max, div_l2, energy_drift
    reference.csv       per-time comparison against the reference solution
    interfaces.csv      extracted interface points and velocities
    projection.json     tube-averaged tensor reports
    stationarity.csv    residual per test field (when enabled)
    snapshots/*.hglw    field snapshots; final.hglw is always written
    checkpoints/*.npz   solver levels plus observer state
    manifest.json       config hash, versions, wall time, status

Tables live in memory and are rewritten at every checkpoint and at the
end, so a resumed run produces byte-identical CSV files.
"""
from __future__ import annotations

import csv
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..diagnostics import (
    EmptyTubeError, InsufficientConcentrationError, ScalarLog, StationarityAccumulator, TestField,
    densities, equipartition_ratio, interface_extract, projection_report, stress_energy, tube_mask,
)
from ..field import FieldState
from ..solver import Leapfrog, Status, run
from .config import Scenario, config_hash, parse_text, resolved_text
from .scenarios import initial_state, make_reference
from .snapshot import write_snapshot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_VERIFY = 4

CHECKPOINT_VERSION = 1


def library_versions() -> dict:
    import numba
    import scipy
    import skimage

    return {"lorentzlab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "scikit-image": skimage.__version__}


@dataclass
class RunResult:
    scenario: Scenario
    status: Status
    steps: int
    dt: float
    wall_time: float
    scalars: np.ndarray
    reference: list[dict] = field(default_factory=list)
    projections: list[dict] = field(default_factory=list)
    stationarity: np.ndarray | None = None
    final_state: FieldState | None = None

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.status is Status.COMPLETED else EXIT_DIVERGED

    @property
    def out_dir(self) -> Path:
        return self.scenario.output_dir

    def column(self, name: str) -> np.ndarray:
        from ..diagnostics import SCALAR_COLUMNS

        cols = SCALAR_COLUMNS + ["energy_drift"]
        return self.scalars[:, cols.index(name)]


def default_test_fields(s: Scenario, state0: FieldState) -> tuple[list[TestField], tuple[float, float]]:
    """Bump family for the stationarity residual.

    Centres sit on the interface at the middle of the window: on the
    reference circle when a radial reference is configured, otherwise on
    the initial interface. One field per centre and per space-time axis.
    """
    R = s["outputs.test_radius"]
    tc = s["outputs.test_time"]
    if tc is None:
        tc = 0.5 * s["solver.t_end"]
    n = state0.grid.dim
    m = s["outputs.test_points"]
    if s.reference == "radial":
        ref = make_reference(s)
        r = ref.radius(tc)
        th = 2 * np.pi * np.arange(m) / m
        c = np.asarray(s["initial.center"] or (0.0, 0.0))
        centers = c + r * np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        pts = interface_extract(state0).points if state0.k == 1 or n == 2 else np.zeros((0, n))
        if len(pts) == 0:
            pts = np.asarray([[0.5 * (lo + hi) for lo, hi in zip(state0.grid.origin, state0.grid.extent)]])
        order = np.lexsort(pts.T[::-1])
        pick = order[np.linspace(0, len(order) - 1, min(m, len(order))).astype(int)]
        centers = pts[pick]
    fields = [TestField((tc, *map(float, c)), R, a) for c in centers for a in range(n + 1)]
    return fields, (tc - R, tc + R)


class Recorder:
    """Observer that feeds every diagnostic table of a run."""

    def __init__(self, s: Scenario, state0: FieldState):
        self.s = s
        self.log = ScalarLog(theta=s["outputs.theta"], residual=s["outputs.residual"])
        self.reference = make_reference(s)
        self.reference_rows: list[dict] = []
        self.interface_rows: list[list[float]] = []
        self.projections: list[dict] = []
        self.recent: list[FieldState] = []
        self.snapshots: list[str] = []
        self.stationarity = None
        if s["outputs.stationarity"]:
            tfs, window = default_test_fields(s, state0)
            self.stationarity = StationarityAccumulator(state0.grid, tfs, window, "varifold" if s.k == 1
                                                        else "tensor")
        self.fixed_tube = s["outputs.tube_radius"]

    def _every(self, key: str, m: int) -> bool:
        c = self.s[key]
        return bool(c) and m % c == 0

    def __call__(self, state: FieldState, m: int) -> None:
        s = self.s
        prev = self.recent[-1] if self.recent else None
        self.recent = (self.recent + [state])[-3:]
        iface = None
        if (self._every("outputs.interface_every", m) or m == 0 or self._every("outputs.projection_every", m)
                or self.fixed_tube):
            if state.k == 1 or state.grid.dim == 2:
                iface = interface_extract(state, prev)
        self.log(state, m)
        if self.fixed_tube and iface is not None and len(iface):
            # replace the threshold-tube ratio with the fixed-radius one
            d = densities(state)
            try:
                self.log._pending[4] = equipartition_ratio(d, mask=tube_mask(state.grid, iface.points,
                                                                             self.fixed_tube))
            except EmptyTubeError:
                self.log._pending[4] = math.nan
        if iface is not None and (self._every("outputs.interface_every", m) or m == 0):
            for i, p in enumerate(iface.points):
                wn = int(iface.windings[i]) if iface.windings is not None else 0
                self.interface_rows.append([state.time, i, *p, *iface.velocities[i], wn])
            if self.reference is not None:
                row = {"t": state.time, **self.reference.compare(state, iface)}
                self.reference_rows.append(row)
        if self._every("outputs.projection_every", m) and iface is not None and len(iface):
            self.projections.append(self._projection(state, iface))
        if self._every("outputs.snapshot_every", m):
            self.snapshots.append(f"snap_{m:08d}.hglw")
            path = self.s.output_dir / "snapshots" / self.snapshots[-1]
            path.parent.mkdir(parents=True, exist_ok=True)
            write_snapshot(state, path)
        if self.stationarity is not None:
            self.stationarity(state, m)

    def _projection(self, state: FieldState, iface) -> dict:
        pts = iface.points
        # deterministic pick: largest first coordinate, then smallest index
        p = pts[int(np.argmax(pts[:, 0]))]
        rho = self.s["outputs.projection_radius"] or 6.0 * state.grid.spacing
        try:
            rep = projection_report(stress_energy(state), densities(state), rho, p)
        except InsufficientConcentrationError as exc:
            return {"t": state.time, "point": [float(v) for v in p], "error": str(exc)}
        return {"t": state.time, "point": [float(v) for v in p], "radius": rho, **rep.to_json()}

    # -- persistence --

    def state_dict(self) -> dict:
        log = self.log.state_dict()
        d = {
            "log_rows": log["rows"], "log_pending": log["pending"],
            "reference_rows": self.reference_rows, "interface_rows": self.interface_rows,
            "projections": self.projections, "snapshots": self.snapshots,
        }
        if self.stationarity is not None:
            d["stat_sums"] = self.stationarity._sums.tolist()
            d["stat_times"] = list(self.stationarity._times)
        return d

    def load_state(self, d: dict, recent: list[FieldState]) -> None:
        self.recent = recent
        hist = recent if self.s["outputs.residual"] else []
        self.log.load_state({"rows": d["log_rows"], "pending": d["log_pending"], "hist": hist})
        self.reference_rows = d["reference_rows"]
        self.interface_rows = d["interface_rows"]
        self.projections = d["projections"]
        self.snapshots = d["snapshots"]
        if self.stationarity is not None:
            self.stationarity._sums = np.array(d["stat_sums"], dtype=float)
            self.stationarity._times = list(d["stat_times"])
        if self.reference is not None and hasattr(self.reference, "advance") and self.reference_rows:
            self.reference.advance(self.reference_rows[-1]["t"])

    # -- output --

    def scalar_rows(self) -> list[list[float]]:
        rows = self.log.rows + ([self.log._pending] if self.log._pending is not None else [])
        if not rows:
            return []
        e0 = rows[0][1]
        return [r + [(r[1] - e0) / e0 if e0 else math.nan] for r in rows]

    def write(self, out: Path) -> None:
        from ..diagnostics import SCALAR_COLUMNS

        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "scalars.csv", SCALAR_COLUMNS + ["energy_drift"], self.scalar_rows())
        if self.reference is not None:
            cols = ["t", *self.reference.columns]
            _write_csv(out / "reference.csv", cols, [[r[c] for c in cols] for r in self.reference_rows])
        if self.interface_rows or self.s["outputs.interface_every"]:
            n = self.s.grid.dim if self.s.grid is not None else 2
            axes = "xyz"[:n]
            cols = ["t", "index", *axes, *(f"v{a}" for a in axes), "winding"]
            rows = [[r[0], int(r[1]), *r[2:-1], int(r[-1])] for r in self.interface_rows]
            _write_csv(out / "interfaces.csv", cols, rows)
        if self.projections or self.s["outputs.projection_every"]:
            (out / "projection.json").write_text(json.dumps(self.projections, indent=1) + "\n")
        if self.stationarity is not None:
            rows = []
            try:
                res = self.stationarity.result
            except ValueError:
                res = np.full(len(self.stationarity.test_fields), math.nan)
            for tf, r in zip(self.stationarity.test_fields, res):
                rows.append([*tf.center, tf.radius, tf.axis, r])
            n = len(self.stationarity.test_fields[0].center) - 1 if rows else 0
            _write_csv(out / "stationarity.csv", ["t_center", *"xyz"[:n], "radius", "axis", "residual"], rows)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


# --- checkpoints ----------------------------------------------------------


def save_checkpoint(path: Path, s: Scenario, lf: Leapfrog, rec: Recorder, wall: float) -> Path:
    meta = {
        "version": CHECKPOINT_VERSION, "config": resolved_text(s), "index": lf.index, "t0": lf.t0,
        "dt": lf.dt, "wall_time": wall, "recorder": rec.state_dict(),
        "recent": [[st.time] for st in rec.recent],
    }
    arrays = {"prev": lf.prev, "curr": lf.curr}
    for i, st in enumerate(rec.recent):
        arrays[f"recent_u{i}"] = st.u
        arrays[f"recent_ut{i}"] = st.ut
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)
    tmp.replace(path)
    return path


def load_checkpoint(path) -> tuple[Scenario, dict, dict]:
    with np.load(path) as z:
        meta = json.loads(bytes(z["meta"]).decode())
        arrays = {k: z[k].copy() for k in z.files if k != "meta"}
    if meta.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
    s = parse_text(meta["config"], str(path))
    return s, meta, arrays


# --- driver ---------------------------------------------------------------


def _execute(s: Scenario, state0: FieldState, rec: Recorder, integrator: Leapfrog | None,
             wall0: float) -> RunResult:
    out = s.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved.cfg").write_text(resolved_text(s))
    ck_every = s["outputs.checkpoint_every"]
    t_start = time.perf_counter()

    def checkpoint(lf: Leapfrog) -> None:
        m = lf.index - 1  # the step whose observers just ran
        if ck_every and m % ck_every == 0 and m > 0:
            save_checkpoint(out / "checkpoints" / f"ckpt_{m:08d}.npz", s, lf, rec,
                            wall0 + time.perf_counter() - t_start)
            rec.write(out)

    traj = run(state0, s.solver, [rec], validate=True, integrator=integrator, hooks=[checkpoint])
    final = traj.final if traj.states else state0
    (out / "snapshots").mkdir(exist_ok=True)
    write_snapshot(final, out / "snapshots" / "final.hglw")
    rec.write(out)
    wall = wall0 + time.perf_counter() - t_start
    stat = None
    if rec.stationarity is not None:
        try:
            stat = rec.stationarity.result
        except ValueError:
            stat = None
    result = RunResult(s, traj.status, traj.step_count, traj.dt, wall, np.array(rec.scalar_rows(), dtype=float),
                       rec.reference_rows, rec.projections, stat, final)
    manifest = {
        "name": s.name, "config_hash": config_hash(s), "status": traj.status.value,
        "exit_code": result.exit_code, "steps": traj.step_count, "dt": traj.dt, "t_final": final.time,
        "wall_time_s": wall, "versions": library_versions(),
        "files": sorted(str(p.relative_to(out)) for p in out.rglob("*") if p.is_file()
                        and p.name != "manifest.json"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return result


def run_scenario(s: Scenario) -> RunResult:
    """Run a single-epsilon scenario; artifacts go to ``s.output_dir``."""
    if s.is_convergence:
        raise ValueError("scenario has an epsilon list; use convergence_study")
    state0 = initial_state(s)
    if s.grid is None:
        s.grid = state0.grid
    rec = Recorder(s, state0)
    return _execute(s, state0, rec, None, 0.0)


def resume(checkpoint, out_dir=None) -> RunResult:
    """Continue a run from a checkpoint written by :func:`run_scenario`."""
    s, meta, arrays = load_checkpoint(checkpoint)
    if out_dir is not None:
        s.values["outputs.dir"] = str(out_dir)
    state0 = initial_state(s)
    if s.grid is None:
        s.grid = state0.grid
    grid = state0.grid
    lf = Leapfrog(grid, s.k, s.epsilon, meta["dt"], arrays["prev"], arrays["curr"], meta["t0"], meta["index"])
    recent = []
    for i, (t,) in enumerate(meta["recent"]):
        recent.append(FieldState(grid, s.k, s.epsilon, t, arrays[f"recent_u{i}"], arrays[f"recent_ut{i}"]))
    rec = Recorder(s, state0)
    rec.load_state(meta["recorder"], recent)
    return _execute(s, state0, rec, lf, meta["wall_time"])


__all__ = ["run_scenario", "resume", "RunResult", "Recorder", "save_checkpoint", "load_checkpoint",
           "EXIT_OK", "EXIT_CONFIG", "EXIT_DIVERGED", "EXIT_VERIFY", "default_test_fields"]
