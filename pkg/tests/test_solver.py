import math

import numpy as np
import pytest

from lorentzlab.diagnostics import total_energy
from lorentzlab.exact import (
    KinkSpec,
    RotatingWaveSpec,
    kink_state,
    periodic_kink_state,
    rotating_wave_state,
)
from lorentzlab.field import Boundary, FieldState, Grid, vacuum
from lorentzlab.solver import (
    Leapfrog,
    ResolutionError,
    SolverConfig,
    Status,
    bootstrap_second_level,
    run,
    stable_dt,
    step,
)


@pytest.mark.parametrize("n, h, frac, want", [(1, 0.01, 0.5, 0.005), (2, 0.01, 0.5, 0.0035355339059327377),
                                             (3, 0.02, 1.0, 0.011547005383792516)])
def test_stable_dt(n, h, frac, want):
    g = Grid((16,) * n, h)
    assert stable_dt(g, frac) == pytest.approx(want, rel=1e-14)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, cfl_fraction=1.5)
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, points_per_width=3.0)
    g = Grid.box(-1.0, 1.0, 64)
    with pytest.raises(ResolutionError):
        SolverConfig(t_end=1.0).validate(g, 0.05)


def test_bootstrap_equilibria():
    g = Grid.box(-1.0, 1.0, 32)
    np.testing.assert_array_equal(bootstrap_second_level(vacuum(g), 0.01), 1.0)
    z = FieldState(g, 1, 0.1, 0.0, np.zeros((1, 32)), np.zeros((1, 32)))
    np.testing.assert_array_equal(bootstrap_second_level(z, 0.01), 0.0)


def test_bootstrap_static_kink():
    eps = 0.05
    errs = []
    for cells in (160, 320):
        g = Grid.box(-1.0, 1.0, cells, Boundary.NEUMANN)
        st = kink_state(g, KinkSpec(eps))
        dt = stable_dt(g, 0.5)
        errs.append(np.abs(bootstrap_second_level(st, dt) - st.u).max() / (dt * g.spacing) ** 2)
    # u1 - u0 is the O(dt^2 h^2) residual of the discrete Laplacian on the profile
    assert errs[1] == pytest.approx(errs[0], rel=0.1)
    assert errs[1] * (stable_dt(g, 0.5) * g.spacing) ** 2 < 1e-3


def test_vacuum_step_is_exact():
    g = Grid.box(0.0, 1.0, 16)
    u = np.ones((1, 16))
    np.testing.assert_array_equal(step(u, u, 0.01, g, 0.1), u)
    lf = Leapfrog(g, 1, 0.1, 0.01, u, u)
    for _ in range(10):
        lf.advance()
    np.testing.assert_array_equal(lf.curr, u)


@pytest.mark.parametrize("cells, bc", [((64,), Boundary.PERIODIC), ((20, 24), Boundary.NEUMANN),
                                       ((10, 12, 8), Boundary.PERIODIC)])
def test_fused_kernel_matches_reference(cells, bc):
    rng = np.random.default_rng(1)
    g = Grid(cells, 0.02, boundary=bc)
    u0 = 1 + 0.1 * rng.normal(size=(2, *cells))
    u1 = u0 + 0.01 * rng.normal(size=(2, *cells))
    dt = stable_dt(g, 0.5)
    lf = Leapfrog(g, 2, 0.1, dt, u0, u1)
    lf.advance()
    np.testing.assert_allclose(lf.curr, step(u0, u1, dt, g, 0.1), rtol=0, atol=1e-13)


def test_linear_dispersion():
    eps, a = 0.1, 1e-8
    g = Grid.box(0.0, 1.0, 64)
    x = g.axes()[0]
    st = FieldState(g, 1, eps, 0.0, (1 + a * np.sin(2 * np.pi * x))[None], np.zeros((1, 64)))
    dt = stable_dt(g, 0.5)
    h = g.spacing
    # discrete relation of the scheme: 1 - cos(theta) = dt^2 Omega^2 / 2
    omega2 = 2 / eps ** 2 + (2 / h) ** 2 * math.sin(math.pi * h) ** 2
    theta = math.acos(1 - 0.5 * dt * dt * omega2)
    amp = []
    lf = Leapfrog.start(st, dt)
    amp.append((lf.prev[0] - 1) @ np.sin(2 * np.pi * x) / (32 * a))
    for _ in range(400):
        amp.append((lf.curr[0] - 1) @ np.sin(2 * np.pi * x) / (32 * a))
        lf.advance()
    amp = np.array(amp)
    m = np.arange(len(amp))
    # fit the measured frequency from the three-term recurrence
    inner = slice(1, -1)
    c = np.sum((amp[2:] + amp[:-2]) * amp[inner]) / np.sum(2 * amp[inner] ** 2)
    assert math.acos(c) == pytest.approx(theta, rel=1e-3)
    np.testing.assert_allclose(amp, np.cos(m * theta), atol=1e-5)


def _kink_error(cells, v=0.5, eps=0.05, t_end=0.5, cfl=0.5):
    g = Grid.box(-1.0, 1.0, cells, Boundary.NEUMANN)
    spec = KinkSpec(eps, v)
    traj = run(kink_state(g, spec), SolverConfig(t_end=t_end, cfl_fraction=cfl))
    fin = traj.final
    return float(np.abs(fin.u - kink_state(g, spec, fin.time).u).max())


def test_boosted_kink_accuracy_and_order():
    e1 = _kink_error(320)
    e2 = _kink_error(640)
    assert e1 <= 5e-3
    assert e1 / e2 == pytest.approx(4.0, rel=0.2)


def test_rotating_wave_order():
    errs = []
    for cells in (320, 640, 1280):
        g = Grid.box(-1.0, 1.0, cells, Boundary.NEUMANN)
        spec = RotatingWaveSpec(2.0, 0.05)
        traj = run(rotating_wave_state(g, spec), SolverConfig(t_end=0.3, cfl_fraction=0.5))
        fin = traj.final
        errs.append(np.abs(fin.u - rotating_wave_state(g, spec, fin.time).u).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders >= 1.8) & (orders <= 2.2)), orders


def test_run_zero_time():
    g = Grid.box(-1.0, 1.0, 64)
    traj = run(kink_state(g, KinkSpec(0.2)), SolverConfig(t_end=0.0))
    assert traj.status is Status.COMPLETED
    assert len(traj.states) == 1


def test_run_vacuum():
    g = Grid.box(-1.0, 1.0, 64)
    traj = run(vacuum(g, 1, 0.2), SolverConfig(t_end=1.0, snapshot_every=20))
    assert traj.status is Status.COMPLETED
    assert len(traj.states) > 3
    assert np.all(np.diff(traj.times) > 0)
    for s in traj.states:
        np.testing.assert_array_equal(s.u, 1.0)
        assert total_energy(s) == 0.0


def test_divergence_detected():
    g = Grid.box(-1.0, 1.0, 64)
    st = vacuum(g, 1, 0.2)
    st.u[0, 10] = 50.0
    traj = run(st, SolverConfig(t_end=1.0))
    assert traj.status is Status.DIVERGED
    assert traj.states  # partial trajectory retained


def test_max_steps():
    g = Grid.box(-1.0, 1.0, 64)
    traj = run(vacuum(g, 1, 0.2), SolverConfig(t_end=1.0, max_steps=10))
    assert traj.status is Status.MAX_STEPS
    assert traj.step_count == 10


def test_energy_conserved_periodic():
    g = Grid.box(-1.0, 1.0, 320)
    st = periodic_kink_state(g, KinkSpec(0.05, 0.6))
    E = []
    run(st, SolverConfig(t_end=3000 * stable_dt(g, 0.5), observe_every=50), [lambda s, m: E.append(total_energy(s))])
    E = np.array(E)
    assert np.max(np.abs(E / E[0] - 1)) <= 5e-4


def test_time_reversal():
    g = Grid.box([-1, -1], [1, 1], 64)
    rng = np.random.default_rng(3)
    st = kink_state(g, KinkSpec(0.1, 0.3, (0.6, 0.8)))
    st.u += 0.01 * rng.normal(size=st.u.shape)
    lf = Leapfrog.start(st, stable_dt(g, 0.5))
    u0, u1 = lf.prev.copy(), lf.curr.copy()
    for _ in range(200):
        lf.advance()
    lf.reverse()
    for _ in range(200):
        lf.advance()
    # after reversal the pair (prev, curr) is (u1, u0)
    assert np.abs(lf.curr - u0).max() <= 1e-10
    assert np.abs(lf.prev - u1).max() <= 1e-10


def _perturbed_pair(dim, cells, cfl, r=0.15, t_end=0.4):
    g = Grid.box([-1.0] * dim, [1.0] * dim, cells)
    base = kink_state(g, KinkSpec(0.1, 0.0, (1.0,) + (0.0,) * (dim - 1), -0.6))
    dist = np.sqrt(np.sum(g.coords() ** 2, axis=0))
    other = base.copy()
    other.u[0] += np.where(dist < r, 0.3 * np.cos(0.5 * np.pi * dist / r) ** 2, 0.0)
    cfg = SolverConfig(t_end=t_end, cfl_fraction=cfl)
    ta = run(base, cfg)
    diff = np.abs(ta.final.u[0] - run(other, cfg).final.u[0])
    return diff, dist, ta.final.time, ta.step_count, g.spacing


@pytest.mark.parametrize("dim, cfl", [(1, 0.5), (2, 0.5), (2, 1.0)])
def test_numerical_domain_of_dependence(dim, cfl):
    # each step reaches one cell further, so nothing beyond r + steps*h can change
    diff, dist, t, steps, h = _perturbed_pair(dim, 200 if dim == 1 else 128, cfl)
    assert diff[dist > 0.15 + steps * h].max() == 0.0
    assert diff.max() > 1e-3


def test_light_cone_exact_at_unit_courant_1d():
    diff, dist, t, steps, h = _perturbed_pair(1, 200, 1.0)
    assert diff[dist > 0.15 + t + 2 * h].max() <= 1e-12


@pytest.mark.xfail(strict=True, reason="explicit stencil leaks ahead of the light cone when dt < h/sqrt(n)")
def test_light_cone_at_half_courant():
    diff, dist, t, steps, h = _perturbed_pair(2, 128, 0.5)
    assert diff[dist > 0.15 + t + 2 * h].max() <= 1e-12


def test_run_is_deterministic():
    g = Grid.box([-1, -1], [1, 1], 64, Boundary.NEUMANN)
    st = kink_state(g, KinkSpec(0.2, 0.4, (1.0, 0.0)))
    a = run(st, SolverConfig(t_end=0.3)).final
    b = run(st, SolverConfig(t_end=0.3)).final
    assert np.array_equal(a.u, b.u) and np.array_equal(a.ut, b.ut)
