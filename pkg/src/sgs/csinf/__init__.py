"""Compressed sensing in infinite dimensions: coherence, sparsity in levels,
multilevel sampling, balancing checks, l1 recovery and theorem evaluation."""

from .balancing import BalancingReport, balancing_check, balancing_thresholds
from .coherence import coherence, level_bounds, local_coherence, local_coherence_matrix, tail_coherence
from .l1 import CsResult, L1InfeasibleError, TruncationError, choose_truncation, l1_solve
from .sampling import MultilevelScheme, draw_scheme, uniform_scheme
from .sparsity import (
    SparsityLevels,
    effective_sparsity,
    flip_coefficients,
    random_sparse_in_levels,
    relative_sparsity,
    sigma_s_m,
)
from .theorem import (
    LevelReport,
    TheoremReport,
    block_diagonal_samples,
    error_bound_terms,
    recovery_error_bound,
    theorem_conditions,
)

__all__ = [
    "BalancingReport",
    "balancing_check",
    "balancing_thresholds",
    "coherence",
    "level_bounds",
    "local_coherence",
    "local_coherence_matrix",
    "tail_coherence",
    "CsResult",
    "L1InfeasibleError",
    "TruncationError",
    "choose_truncation",
    "l1_solve",
    "MultilevelScheme",
    "draw_scheme",
    "uniform_scheme",
    "SparsityLevels",
    "effective_sparsity",
    "flip_coefficients",
    "random_sparse_in_levels",
    "relative_sparsity",
    "sigma_s_m",
    "LevelReport",
    "TheoremReport",
    "block_diagonal_samples",
    "error_bound_terms",
    "recovery_error_bound",
    "theorem_conditions",
]
