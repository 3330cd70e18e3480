"""Finite-difference solver for the reduced self-dual vortex equations of
SO(3)-symmetric calorons on hyperbolic space.

The strip ``(0, inf) x S^1_beta`` carries the equation

    Lap u = (2 / Xi^2)(e^u - 1) + 4 pi sum_j delta_{p_j},   Xi = (S/2) sinh(2r/S),

whose solutions with ``N`` prescribed zeros give charge-``N`` calorons.
"""
from .errors import (CaloronError, DomainError, InternalConsistencyError, IterativeFailure,
                     LinearSolverError, SingularPointError, TruncationError, ValidationError)
from .geometry import (PhysicalParams, conformal_factor, coordinate_map_r_to_R, coordinate_map_R_to_r,
                       decay_envelope, metric_weight)
from .grid import ScalarField, StripGrid, gradient, integrate, laplacian, read_field_csv, write_field_csv
from .observables import (ObservableReport, action, curvature, flux, gauge_potentials, observe,
                          reconstruct_u, selfduality_residual)
from .pipeline import RunConfig, SolutionBundle, run_pipeline
from .radial import (MajorantG, RadialProfile, check_decay_bounds, compute_majorant, energy_functional,
                     monotone_ladder, solve_truncated)
from .solver import SolveReport, SolverConfig, residual, solve
from .sources import CutoffSpec, SourceData, VortexConfig, cutoff

__version__ = "0.1.0"
