"""Similarity self-join size estimation with per-level sketches.

Counts record pairs that agree on at least ``s`` of ``d`` attributes in one
pass and sublinear space, plus exact and sampling baselines to check it
against.
"""
from __future__ import annotations

from ._backend import BACKEND
from .baselines import (
    ExactCounts,
    SyntheticDataset,
    exact_cross_pair_counts,
    exact_pair_counts,
    expand_duplicates,
    generate_synthetic,
    random_sampling_estimate,
)
from .bounds import suggest_parameters, variance_bound_offline, variance_bound_online
from .combinatorics import ColumnCombination, alternating_binomial_sum, choose
from .estimator import (
    EstimateReport,
    SjpcConfig,
    SjpcState,
    join_finalize,
    solve_pair_counts,
    solve_pair_counts_closed_form,
)
from .sketch import FastAgmsSketch

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ColumnCombination",
    "EstimateReport",
    "ExactCounts",
    "FastAgmsSketch",
    "SjpcConfig",
    "SjpcState",
    "SyntheticDataset",
    "alternating_binomial_sum",
    "choose",
    "exact_cross_pair_counts",
    "exact_pair_counts",
    "expand_duplicates",
    "generate_synthetic",
    "join_finalize",
    "random_sampling_estimate",
    "solve_pair_counts",
    "solve_pair_counts_closed_form",
    "suggest_parameters",
    "variance_bound_offline",
    "variance_bound_online",
]
