"""Numerical laboratory for the semilinear wave equation ``u_tt - Lap u + grad W(u) / eps^2 = 0``.

Submodules:

``minkowski``    Minkowski-signature linear algebra (inner products, boosts, eta-spectra).
``field``        grids, field states, the quartic potential, discrete operators.
``solver``       three-level leapfrog integration.
``exact``        kinks, rotating waves, vortices, pulsating circles.
``minimal``      reference solvers for time-like minimal curves and graphs.
``diagnostics``  densities, stress-energy tensors, residuals, interfaces, projections.
``lab``          scenario files, runs, convergence studies and the command line.
"""
from .field import Boundary, FieldState, Grid, Potential, c_k
from .solver import SolverConfig, Status, run

__version__ = "0.1.0"

__all__ = ["Boundary", "FieldState", "Grid", "Potential", "c_k", "SolverConfig", "Status", "run", "__version__"]
