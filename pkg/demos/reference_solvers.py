"""
Three reference solvers
=======================

Sharp-interface references are built independently of the field solver:
the radial ODE, a front tracker for closed curves, and the minimal graph
PDE. Each is checked against what it must reproduce.
"""
import math

import numpy as np

from lorentzlab.minimal import FrontCurve, GraphState, front_solve, graph_energy, graph_solve, radial_solve

###############################################################################
# Radial law in the plane: r'' = -(1 - r'^2) / r has r0 cos(t / r0).
sol = radial_solve(0.6, 2, 1e-3, 0.9)
print("radial vs closed form:", np.abs(sol.r - 0.6 * np.cos(sol.t / 0.6)).max())
print("collapse time", radial_solve(0.6, 2, 1e-4, 2.0).t_star, "expected", math.pi * 0.3)

###############################################################################
# Front tracking of a circle agrees with the ODE.
curves = front_solve(FrontCurve.circle(0.6, 256), 6e-4, 0.8, record_every=200)
for c in curves:
    print(f"t={c.t:.3f}  front r={c.mean_radius:.6f}  ode r={float(sol.radius_at(c.t)):.6f}")

###############################################################################
# A null profile h(y - t) is an exact solution of the graph equation.
cells = 256
dy = 1.0 / cells
y = dy * np.arange(cells)
g = GraphState(dy, 0.1 * np.sin(2 * np.pi * y), -0.2 * np.pi * np.cos(2 * np.pi * y))
out = graph_solve(g, 0.5 * dy, 0.5)
print("graph null-profile error", np.abs(out.h - 0.1 * np.sin(2 * np.pi * (y - out.t))).max())
print("graph energy", graph_energy(g), "->", graph_energy(out))
