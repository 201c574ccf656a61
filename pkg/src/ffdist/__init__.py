"""Exact distance-graph counts over finite fields and a checker for the bounds they obey."""

from .bounds import Real, qp
from .charsums import (gauss_sum, kloosterman_sum, orthogonality_check, quadratic_weil, quadratic_weil_closed,
                       salie_sum, weil_bound)
from .embed import (CountReport, DistanceGraph, PointSet, TwoEdgeSum, count_cycles, count_cycles_nondegenerate,
                    count_graph, count_graph_distinct, count_paths, count_paths_labeled, count_tree, cycle_graph,
                    matching_graph, pair_count, parse_graph, path_graph, random_tree, regularize, star_graph,
                    t_degrees, two_edge_sum, two_edge_sum_rank_one)
from .exact import QPower
from .field import FieldElement, FiniteField, field_of_order, make_field
from .forms import (DistanceFn, Space, bilinear_form, canonical_form, d_lambda, diagonal_form, dot_product,
                    make_space, norm_form, parse_form, phi, quadratic_form, sphere, sphere_fourier, sphere_sizes)
from .kernel import BudgetExceeded
from .sets import make_set
from .verify import Grid, TheoremCheck, replay, run_campaign

__version__ = "0.1.0"
