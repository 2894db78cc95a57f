"""
A travelling kink
=================

The 1-D kink ``tanh(x / (sqrt(2) eps))`` boosted to speed v is an exact
solution. We evolve it with the leapfrog solver and compare.
"""
import numpy as np

from lorentzlab.diagnostics import densities, equipartition_ratio, total_energy, total_lagrangian
from lorentzlab.exact import KinkSpec, kink_energy, kink_lagrangian, kink_state
from lorentzlab.field import Boundary, Grid
from lorentzlab.solver import SolverConfig, run

eps, v = 0.05, 0.6
spec = KinkSpec(eps, v, (1.0,), -0.3)

###############################################################################
# Eight cells per width. In 1-D the Courant fraction 1 (dt = h) is stable
# and the most accurate choice.
grid = Grid.box(-1.0, 1.0, 320, Boundary.NEUMANN)
state0 = kink_state(grid, spec)

print(f"energy     {total_energy(state0):.5f}   gamma*sigma {kink_energy(spec):.5f}")
print(f"lagrangian {total_lagrangian(state0):.5f}   sigma/gamma {kink_lagrangian(spec):.5f}")
print(f"w / l      {equipartition_ratio(densities(state0)):.5f}")

###############################################################################
# Run to t = 0.5 and measure the field error against the moving profile.
for cfl in (1.0, 0.5):
    traj = run(state0, SolverConfig(t_end=0.5, cfl_fraction=cfl))
    fin = traj.final
    err = np.abs(fin.u - kink_state(grid, spec, fin.time).u).max()
    print(f"cfl {cfl}: {traj.step_count} steps, L-inf error {err:.2e}")

###############################################################################
# Halving h should divide the error by four.
errs = []
for cells in (320, 640, 1280):
    g = Grid.box(-1.0, 1.0, cells, Boundary.NEUMANN)
    fin = run(kink_state(g, spec), SolverConfig(t_end=0.5, cfl_fraction=1.0)).final
    errs.append(np.abs(fin.u - kink_state(g, spec, fin.time).u).max())
print("observed orders", np.round(np.log2(np.array(errs[:-1]) / errs[1:]), 3))
