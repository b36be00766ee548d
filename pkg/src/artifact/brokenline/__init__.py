"""Broken-line flow fields on rectangular domains of the tilted lattice."""

from .bricks import Decomposition, check_order, crossing_weight, decompose, potential, recompose
from .domain import (MINUS_HIGH, MINUS_LOW, PLUS_HIGH, PLUS_LOW, BrokenTrace, RectDomain, to_ij,
                     to_tx)
from .field import (INT, REAL, FlowField, exit_sums, flow_arrays, flow_from_boundary, reflect,
                    zero_field)
from .intersections import (HORIZONTAL, LINE_KINDS, NE, SE, VERTICAL, IntersectionStats,
                            horizontal_joint_pmf, intersection_stats)
from .intervals import BrokenLine, chase_point, propagate_interval, vertex_case, weight
from .reversible import (ColumnState, ExponentialFamily, GeometricFamily, geometric_chain_step,
                         kernel_mass, optimal_exponential_split, optimal_geometric_split,
                         run_geometric_chain, sample_reversible_boundary)
from .totals import CrossingTotal, crossing_total
