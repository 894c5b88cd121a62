"""Scalar conservation laws whose flux switches with the sign of the gradient.

Where ``u_x > 0`` the flux is ``f``, where ``u_x < 0`` it is ``g``, with
``f > g`` both strictly convex.  The package builds exact Riemann fans,
tracks interfaces through their ODEs, solves piecewise monotone Cauchy
problems with the fewest interfaces, and certifies the results.
"""
from .cauchy import CauchyProblem, SolutionTimeline, inject_spike, localize, solve
from .errors import GradFluxError
from .estimator import MixedFluxSolver
from .flux import ConvexFlux, FluxPair, tangent_lower, tangent_pair_from_point, tangent_upper
from .interface_ode import InterfaceProblem, picard_iterate, picard_solve, step_integrate
from .profile import InterfaceSet, PiecewiseMonotoneProfile, Segment, ThetaField
from .riemann import FanSolution, enumerate_admissible_alternatives, eval_fan, solve_riemann
from .scenario import Scenario, emit_scenario, parse_scenario
from .validate import check_fan, validate_timeline

__version__ = "0.1.0"
