"""Built-in self check: algebraic identities and closed-form solutions.

Each check is small enough that the whole suite runs in seconds. The
``verify`` CLI verb prints one line per check and exits with status 4 if
any of them fails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..diagnostics import densities, eta_trace, stress_energy, total_energy, total_lagrangian
from ..exact import KinkSpec, kink_energy, kink_state, periodic_kink_state, sigma_quartic
from ..field import Boundary, FieldState, Grid
from ..minimal import radial_solve
from ..minkowski import charpoly_roots, eig_eta_selfadjoint
from ..solver import SolverConfig, Status, run
from .snapshot import decode, encode


@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.value) and self.value <= self.tolerance)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<40} {self.value:10.3e}  (tol {self.tolerance:.1e})"


def _random_states(seed: int = 7):
    rng = np.random.default_rng(seed)
    for n, cells in ((1, (64,)), (2, (24, 20)), (3, (10, 9, 8))):
        for k in (1, 2):
            for bc in Boundary:
                grid = Grid(cells, 0.05, boundary=bc)
                u = rng.uniform(-1.5, 1.5, (k, *cells))
                ut = rng.uniform(-2, 2, (k, *cells))
                yield FieldState(grid, k, 0.1, 0.0, u, ut)


def identity_energy() -> Check:
    worst = 0.0
    for st in _random_states():
        d = densities(st)
        T = stress_energy(st)
        worst = max(worst, float(np.max(np.abs(d.e + T.component(0, 0))) / max(1.0, np.abs(d.e).max())))
    return Check("e = -T^00 on random fields", worst, 1e-12)


def identity_trace() -> Check:
    worst = 0.0
    for st in _random_states():
        d = densities(st)
        n = st.grid.dim
        rhs = 2 * d.w + (n - 1) * d.l
        worst = max(worst, float(np.max(np.abs(eta_trace(stress_energy(st)) - rhs))
                                 / max(1.0, np.abs(d.e).max())))
    return Check("tr(eta T) = 2w + (n-1)l on random fields", worst, 1e-12)


def static_sigma() -> Check:
    eps = 0.05
    grid = Grid.box(-1.0, 1.0, 320, Boundary.NEUMANN)
    lag = total_lagrangian(kink_state(grid, KinkSpec(eps)))
    return Check("static kink lagrangian vs 2*sqrt(2)/3", abs(lag - sigma_quartic()) / sigma_quartic(), 1e-2)


def energy_conservation() -> Check:
    eps = 0.05
    grid = Grid.box(-1.0, 1.0, 320, Boundary.PERIODIC)
    st = periodic_kink_state(grid, KinkSpec(eps, 0.6))
    e = []
    cfg = SolverConfig(t_end=2000 * 0.5 * grid.spacing, observe_every=100)
    traj = run(st, cfg, [lambda s, m: e.append(total_energy(s))])
    if traj.status is not Status.COMPLETED:
        return Check("energy drift, periodic kink, 2000 steps", math.inf, 5e-4)
    return Check("energy drift, periodic kink, 2000 steps", float(np.max(np.abs(np.array(e) / e[0] - 1))), 5e-4)


def boosted_kink() -> Check:
    spec = KinkSpec(0.05, 0.6)
    grid = Grid.box(-1.0, 1.0, 320, Boundary.NEUMANN)
    traj = run(kink_state(grid, spec), SolverConfig(t_end=0.5, cfl_fraction=1.0))
    fin = traj.final
    err = float(np.max(np.abs(fin.u - kink_state(grid, spec, fin.time).u)))
    return Check("boosted kink L-inf error at t=0.5", err, 5e-3)


def kink_energy_value() -> Check:
    spec = KinkSpec(0.05, 0.6)
    grid = Grid.box(-1.0, 1.0, 320, Boundary.NEUMANN)
    E = total_energy(kink_state(grid, spec))
    return Check("boosted kink energy vs gamma*sigma", abs(E / kink_energy(spec) - 1), 1e-2)


def radial_closed_form() -> Check:
    r0 = 0.6
    sol = radial_solve(r0, 2, 1e-4, 0.9 * math.pi * r0 / 2)
    err = float(np.max(np.abs(sol.r - r0 * np.cos(sol.t / r0))))
    return Check("radial law n=2 vs r0 cos(t/r0)", err, 1e-8)


def spectra_agree() -> Check:
    rng = np.random.default_rng(3)
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(20):
            a = rng.normal(size=(n + 1, n + 1))
            A = a + a.T
            A[0, 0] = abs(A[0, 0]) + 4 * (n + 1)  # dominant time-time entry keeps the spectrum real
            ev = eig_eta_selfadjoint(A)
            if not ev.real:
                continue
            roots = np.sort(np.real(charpoly_roots(np.diag([-1.0] + [1.0] * n) @ A)))[::-1]
            worst = max(worst, float(np.max(np.abs(roots - ev.values))))
    return Check("eta-spectrum: QR vs closed-form roots", worst, 1e-8)


def snapshot_roundtrip() -> Check:
    for st in _random_states(11):
        back = decode(encode(st), st.grid.boundary)
        if not (np.array_equal(back.u, st.u) and np.array_equal(back.ut, st.ut)):
            return Check("snapshot round trip", 1.0, 0.0)
    return Check("snapshot round trip", 0.0, 0.0)


CHECKS: list[Callable[[], Check]] = [
    identity_energy, identity_trace, static_sigma, kink_energy_value, energy_conservation,
    boosted_kink, radial_closed_form, spectra_agree, snapshot_roundtrip,
]


def run_checks(echo: Callable[[str], None] | None = print) -> list[Check]:
    out = []
    for fn in CHECKS:
        c = fn()
        out.append(c)
        if echo is not None:
            echo(c.line())
    return out


__all__ = ["Check", "CHECKS", "run_checks"]
