"""
The tensor that sees the interface
==================================

Averaging the stress-energy tensor over a small tube around the interface
and normalising by the lagrangian gives a matrix whose eta-spectrum is
that of an orthogonal projection onto the (time-like) tangent space.
"""
import numpy as np

from lorentzlab.diagnostics import densities, projection_report, stress_energy
from lorentzlab.exact import KinkSpec, kink_state
from lorentzlab.field import Grid

###############################################################################
# A boosted planar kink in 2-D: tangent space spanned by time and y.
grid = Grid.box([-1, -1], [1, 1], 256)
eps = 0.05
for v in (0.0, 0.6):
    st = kink_state(grid, KinkSpec(eps, v, (1.0, 0.0)))
    rep = projection_report(stress_energy(st), densities(st), 6 * grid.spacing, (0.0, 0.0))
    print(f"v={v}: eigenvalues {np.round(rep.eigenvalues, 4)}, trace {rep.trace:.4f}, "
          f"space-like complement: {rep.spacelike_ok}")
    print(np.round(rep.T_tilde.entries, 4))
