"""Command-line interface and machine-readable outputs."""

from .main import (EXIT_INTEGRITY, EXIT_NOT_STABILIZED, EXIT_OK, EXIT_PARAMETER, build_parser,
                   dispatch, main, parse_params)
from .output import (INTERSECTION_HIST, LLN_CONVERGENCE, PHASE_SCAN, PLOT_KINDS, Column,
                     ResultTable, RunManifest, dumps, emit_plot_data, format_cell)

__all__ = [
    "EXIT_INTEGRITY", "EXIT_NOT_STABILIZED", "EXIT_OK", "EXIT_PARAMETER", "build_parser",
    "dispatch", "main", "parse_params", "INTERSECTION_HIST", "LLN_CONVERGENCE", "PHASE_SCAN",
    "PLOT_KINDS", "Column", "ResultTable", "RunManifest", "dumps", "emit_plot_data", "format_cell",
]
