"""Almost periodic solutions of differential equations with piecewise constant
argument of generalized type (DEPCAG), from the reduced difference system and
its exponential dichotomy."""
from .dynamics import (LinearDEPCAG, cauchy_matrix, fundamental_matrix, jn_matrix,
                       monodromy_sequence, zn_matrix)
from .functions import Harmonic, QuasiPeriodicMatrixFunction
from .linear_solver import (GridSolution, PiecewiseSolution, almost_periodicity_check,
                            bounded_sequence, continuous_solution, norm_bound_check)
from .mesh import MeshSpec, TimeMesh, build_mesh, find_translations, gamma, uniform_mesh
from .nonlinear_solver import (NonlinearRHS, assemble_nonlinear_solution, contraction_operator,
                               fixed_point, lifted_forcing, reduce_nonlinear)
from .oracle import integrate_depcag, residual_check
from .reduction import (DichotomyCertificate, ReducedSystem, bound_constants,
                        dichotomy_from_constant, dichotomy_from_periodic,
                        dichotomy_from_projection, green_matrix, reduce_system,
                        reduced_forcing, verify_dichotomy)
from .stability import decay_certificate, decay_rate, forward_sequence, forward_solution

__version__ = "0.1.0"
