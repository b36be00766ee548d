"""Last-passage percolation: exact solvers, the broken-line identity and large-grid experiments."""

from .experiments import (GAP_COLUMNS, LLN_COLUMNS, GapRow, LlnRow, LlnTable,
                          boundary_gap_experiment, crossing_values, lln_experiment,
                          reversible_split, weights_from)
from .solvers import (BROKEN_LINE, DP, ExponentialWeights, GeometricWeights, LppInstance,
                      LppSolution, boundary_comparison, brokenline_path, check_path,
                      last_passage_table, solve_brokenline, solve_dp)

__all__ = [
    "GAP_COLUMNS", "LLN_COLUMNS", "GapRow", "LlnRow", "LlnTable", "boundary_gap_experiment",
    "crossing_values", "lln_experiment", "reversible_split", "weights_from",
    "BROKEN_LINE", "DP", "ExponentialWeights", "GeometricWeights", "LppInstance", "LppSolution",
    "boundary_comparison", "brokenline_path", "check_path", "last_passage_table",
    "solve_brokenline", "solve_dp",
]
