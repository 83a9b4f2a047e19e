"""D-optimal sensor selection via convex relaxation.

Selects p sensor locations out of n candidates by maximizing the
log-determinant of the Fisher information matrix. Ships a dense
equality-constrained Newton solver for the barrier-relaxed problem, two
randomized subspace variants that cut the per-step cost from O(n^3) to
O(s^3), determinant-greedy and random baselines, a scikit-learn selector,
and a CLI benchmark harness.
"""

from .baselines import greedy_select, random_select
from .exceptions import (
    ConfigParseError,
    DampedSolveError,
    LineSearchError,
    MatrixParseError,
    RankDeficiencyError,
)
from .objective import FisherMatrix, d_optimality, fisher, gradient, relaxed_objective, sketched_hessian
from .problems import (
    center_snapshots,
    gen_gaussian_problem,
    gen_lowrank_snapshots,
    pod_basis,
    read_matrix,
    write_matrix,
)
from .rng import substream, substream_seed
from .selector import SensorSelector
from .solvers import (
    SolverConfig,
    SolverReport,
    TraceRow,
    backtracking_line_search,
    constrained_newton_step,
    decrement,
    round_top_p,
    sketch_elite,
    sketch_uniform,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "FisherMatrix",
    "SensorSelector",
    "SolverConfig",
    "SolverReport",
    "TraceRow",
    "backtracking_line_search",
    "center_snapshots",
    "constrained_newton_step",
    "d_optimality",
    "decrement",
    "fisher",
    "gen_gaussian_problem",
    "gen_lowrank_snapshots",
    "gradient",
    "greedy_select",
    "pod_basis",
    "random_select",
    "read_matrix",
    "relaxed_objective",
    "round_top_p",
    "sketch_elite",
    "sketch_uniform",
    "sketched_hessian",
    "solve",
    "substream",
    "substream_seed",
    "write_matrix",
    "ConfigParseError",
    "DampedSolveError",
    "LineSearchError",
    "MatrixParseError",
    "RankDeficiencyError",
]
