"""Under-relaxed cyclic projections, epsilon-cycles and a counterexample to their convergence."""
from .convex_sets import (Cylinder, Hull, Point, ProjectionError, ProjectionResult, Segment,
                          contains, project, project_hull_nearest_point, sets_from_text,
                          sets_to_text, verify_projection)
from .engine import (ConvergenceError, EpsilonCycle, SetSystem, Trajectory, cycle_residual,
                     iterates_from_support, least_squares_gradient, least_squares_objective,
                     run_lambda_process, solve_cycle, solve_least_squares, support_of, sweep)
from .counterexample import (CounterexampleModel, EpsilonRangeError, PathPoint, Plateau,
                             build_model, epsilon_of_contact, epsilon_sweep, example1_system,
                             invert_epsilon, oscillation_witness, path_point, predicted_cycle)

__version__ = "0.1.0"
