"""Overlapping community detection with spectral additive clustering."""

from .graph import SparseGraph, degrees, read_circles, read_edge_list, write_edge_list
from .metrics import estimation_error, evaluate, fp_fn_rates, misclassified, nvi
from .sbmo import (
    check_identifiability,
    expected_adjacency,
    generate_membership,
    sample_graph,
    scaling_summary,
    subcommunities,
)
from .solver import SaacConfig, exhaustive_oracle, saac_fit, saac_fit_constrained_T
from .spectra import adaptive_select, core_quantities, eig_sym, fixed_k_select, nb_spectrum

__version__ = "0.1.0"
