import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentzlab.minimal import (
    FrontCurve,
    GraphState,
    RefStatus,
    curvature_and_normal,
    curve_to_csv,
    front_solve,
    graph_area,
    graph_energy,
    graph_pde_step,
    graph_solve,
    graph_to_csv,
    radial_rhs,
    radial_solve,
    redistribute,
    signed_area,
)


@pytest.mark.parametrize("r, rdot, n, want", [
    (1.0, 0.0, 2, (0.0, -1.0)),
    (2.0, 0.0, 3, (0.0, -1.0)),
    (0.5, -math.sqrt(3) / 2, 2, (-math.sqrt(3) / 2, -0.5)),
])
def test_radial_rhs(r, rdot, n, want):
    assert radial_rhs(r, rdot, n) == pytest.approx(want, abs=1e-15)


def test_radial_closed_form():
    sol = radial_solve(1.0, 2, 1e-3, 1.4)
    assert sol.status is RefStatus.OK
    assert np.abs(sol.r - np.cos(sol.t)).max() <= 1e-8


def test_radial_order():
    errs = []
    for dt in (4e-2, 2e-2, 1e-2):
        sol = radial_solve(1.0, 2, dt, 1.2)
        errs.append(np.abs(sol.r - np.cos(sol.t)).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders >= 3.7) & (orders <= 4.3)), orders


def test_radial_collapse_time():
    sol = radial_solve(1.0, 2, 1e-4, 2.0)
    assert sol.status is RefStatus.SINGULAR
    assert sol.t_star == pytest.approx(math.pi / 2, abs=2e-3)
    s3 = radial_solve(1.0, 3, 1e-4, 2.0)
    assert s3.status is RefStatus.SINGULAR
    assert s3.t_star < math.pi / 2
    assert np.all(np.diff(s3.r) < 0)


def test_radial_interpolation_and_validation():
    sol = radial_solve(0.6, 2, 1e-3, 0.5)
    t = np.linspace(0, 0.5, 77)
    np.testing.assert_allclose(sol.radius_at(t), 0.6 * np.cos(t / 0.6), atol=1e-9)
    with pytest.raises(ValueError):
        radial_solve(0.0, 2, 1e-3, 1.0)
    with pytest.raises(ValueError):
        radial_solve(1.0, 2, 1e-3, 1.0, rdot0=1.0)


def _graph(cells=256, amp=0.1, sign=-1.0, profile="sin"):
    dy = 1.0 / cells
    y = dy * np.arange(cells)
    if profile == "sin":
        h = amp * np.sin(2 * np.pi * y)
        hdot = sign * amp * 2 * np.pi * np.cos(2 * np.pi * y)
    else:
        z = np.mod(y - 0.5 + 0.5, 1.0) - 0.5
        h = amp * np.exp(-z ** 2 / 0.01)
        hdot = sign * (-2 * z / 0.01) * h
    return GraphState(dy, h, hdot), y


def test_graph_fixed_points():
    g = GraphState(0.01, np.full(100, 0.3), np.zeros(100))
    out = graph_solve(g, 0.005, 1.0)
    np.testing.assert_array_equal(out.h, 0.3)
    y = 0.01 * np.arange(100)
    # affine in time; periodic in y forces b = 0
    g = GraphState(0.01, 0.2 + 0 * y, np.full(100, 0.7))
    out = graph_solve(g, 0.005, 0.5)
    np.testing.assert_allclose(out.h, 0.2 + 0.7 * 0.5, atol=1e-14)
    np.testing.assert_allclose(out.hdot, 0.7, atol=1e-14)


@pytest.mark.parametrize("profile", ["sin", "gauss"])
def test_graph_null_profile_second_order(profile):
    errs = []
    for cells in (128, 256, 512):
        g, y = _graph(cells, profile=profile, sign=-1.0)
        f = lambda s: (0.1 * np.sin(2 * np.pi * s) if profile == "sin"
                       else 0.1 * np.exp(-(np.mod(s - 0.5 + 0.5, 1.0) - 0.5) ** 2 / 0.01))
        out = graph_solve(g, 0.5 / cells, 0.5)
        errs.append(np.abs(out.h - f(y - out.t)).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8), orders


def test_graph_energy_conserved():
    dy = 1.0 / 256
    y = dy * np.arange(256)
    g = GraphState(dy, 0.05 * np.sin(2 * np.pi * y), np.zeros(256))
    E0 = graph_energy(g)
    out = [g]
    for _ in range(512):
        out.append(graph_pde_step(out[-1], 0.5 * dy))
    E = np.array([graph_energy(s) for s in out])
    assert np.abs(E / E0 - 1).max() <= 1e-3


def test_graph_area_for_null_profile_is_length():
    g, _ = _graph(256, sign=-1.0)
    assert graph_area(g) == pytest.approx(1.0, abs=1e-3)


def test_graph_singular_detection():
    dy = 0.01
    g = GraphState(dy, np.zeros(100), np.full(100, 0.999))
    out = graph_solve(g, 0.5 * dy, 0.05)
    assert out.status is RefStatus.OK
    g = GraphState(dy, np.zeros(100), np.full(100, 1.5))
    assert graph_pde_step(g, 0.5 * dy).status is RefStatus.SINGULAR


def test_curvature_sign_convention():
    c = FrontCurve.circle(0.5, 128)
    kappa, normal = curvature_and_normal(c.vertices)
    np.testing.assert_allclose(kappa, -1 / 0.5, rtol=1e-3)
    # outward normals
    radial = c.vertices / np.linalg.norm(c.vertices, axis=1, keepdims=True)
    np.testing.assert_allclose(np.sum(normal * radial, axis=1), 1.0, atol=1e-12)


def test_front_curve_orientation():
    v = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=float)
    c = FrontCurve(v, 0.0)
    assert signed_area(c.vertices) == pytest.approx(1.0)


def test_redistribute_uniform_spacing():
    c = FrontCurve.ellipse(0.8, 0.4, 200)
    seg = np.linalg.norm(np.roll(c.vertices, -1, axis=0) - c.vertices, axis=1)
    assert seg.max() / seg.mean() <= 1.01 and seg.min() / seg.mean() >= 0.99
    # chord and spline arclength differ slightly, so a second pass moves little
    again = redistribute(c)
    assert np.abs(again.vertices - c.vertices).max() <= 2e-3 * seg.mean()
    circ = FrontCurve.circle(0.5, 64)
    np.testing.assert_allclose(redistribute(circ).vertices, circ.vertices, atol=1e-14)


def test_front_circle_matches_cos():
    out = front_solve(FrontCurve.circle(1.0, 256), 1e-3, 1.3, record_every=100)
    assert all(c.status is RefStatus.OK for c in out)
    for c in out:
        assert c.mean_radius == pytest.approx(math.cos(c.t), abs=1e-3)


@settings(max_examples=6, deadline=None)
@given(st.floats(0.3, 1.0), st.floats(-0.5, 0.5))
def test_front_agrees_with_radial(r0, v0):
    ref = radial_solve(r0, 2, 1e-4, 2 * r0, rdot0=v0)
    t_end = 0.9 * min(ref.t_star, 2 * r0)
    out = front_solve(FrontCurve.circle(r0, 256, speed=v0), 1e-3 * r0, t_end, record_every=25,
                      check_intersections=False)
    for c in out:
        assert c.mean_radius == pytest.approx(float(ref.radius_at(c.t)), rel=2e-3)


def test_front_ellipse_collapses():
    out = front_solve(FrontCurve.ellipse(0.6, 0.3, 256), 1e-3, 2.0, record_every=50)
    assert out[-1].status is RefStatus.SINGULAR
    assert 0 < out[-1].t < 2.0 and out[-1].reason


def test_static_plane_boosted_is_held():
    # uniformly translating straight line: a graph h = v t + c
    g = GraphState(0.01, np.full(100, -0.2), np.full(100, 0.6))
    out = graph_solve(g, 0.005, 1.0)
    np.testing.assert_allclose(out.h, -0.2 + 0.6 * out.t, atol=1e-13)


def test_csv_writers(tmp_path):
    curves = front_solve(FrontCurve.circle(0.5, 16), 1e-2, 0.02)
    curve_to_csv(curves, tmp_path / "c.csv")
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0] == "t,vertex,x,y,speed" and len(rows) == 1 + 16 * len(curves)
    g, _ = _graph(8)
    graph_to_csv([g], tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "t,y,h,hdot"


def test_graph_area_conserved_for_null_profiles():
    g, _ = _graph(256, sign=-1.0)
    areas = [graph_area(g)]
    for _ in range(512):
        g = graph_pde_step(g, 0.5 * g.dy)
        areas.append(graph_area(g))
    assert np.abs(np.array(areas) / areas[0] - 1).max() <= 1e-3


@pytest.mark.xfail(strict=True, reason="the area is the lagrangian of the graph flow; only the Noether energy is conserved")
def test_graph_area_conserved_standing_wave():
    dy = 1.0 / 256
    y = dy * np.arange(256)
    g = GraphState(dy, 0.05 * np.sin(2 * np.pi * y), np.zeros(256))
    areas = [graph_area(g)]
    for _ in range(512):
        g = graph_pde_step(g, 0.5 * dy)
        areas.append(graph_area(g))
    assert np.abs(np.array(areas) / areas[0] - 1).max() <= 1e-3
