"""Mallows permutations as stable matchings of Bernoulli-percolated bipartite graphs."""
from .analysis import (
    FlowMismatch,
    exact_conditional_law,
    mallows_pmf,
    min_compatible_distance,
    shift_ladder_check,
    verify_stable,
)
from .core import (
    UNKNOWN,
    UNMATCHED,
    CrossingProfile,
    FinitePermutation,
    FiniteSet,
    InsufficientWindow,
    LowSet,
    SemiInfinite,
    WindowMatching,
    crossing_profile,
    cut_positions,
    flow_of,
    inversion_number,
)
from .harness import run_all, run_experiment
from .oracle import EdgeOracle, GraphOracle, OracleParams, Predicate, ScanCapExceeded
from .qseries import QSeriesValue, coupling_tail_bound, q_pochhammer_inf
from .report import Check, ExperimentReport
from .samplers import (
    CutChainState,
    MaxMExceeded,
    TameSampleConfig,
    both_perfect_correlation,
    cut_chain_step,
    perfect_match_probability,
    sample_semiinfinite,
    sample_tame,
    stable_match_finite,
    stable_match_low_pair,
)
from .wild import WildConfig, build_wild, build_wild_sharp, growth_diagnostics

__version__ = "0.1.0"
