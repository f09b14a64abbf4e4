"""Profit-maximizing audience targeting via multiple-choice knapsack."""

from adtarget.errors import DomainError, ParseError, SchemaError
from adtarget.stats_model import (
    APPENDIX_SCHEMA,
    FeatureStats,
    StatsDataset,
    TypeStat,
    ValidationReport,
    generate_synthetic,
    load_dataset,
    serialize_dataset,
    validate,
)
from adtarget.prefix_gen import (
    CandidateFamily,
    PrefixCandidate,
    build_family,
    greedy_subproblem,
    rank_types,
)
from adtarget.mckp_solver import (
    MckpInstance,
    MckpItem,
    MckpSolution,
    build_instance,
    fast_path,
    prune,
    solve_exact,
    solve_lp,
)
from adtarget.strategy_engine import (
    Strategy,
    SweepResult,
    correlation_report,
    evaluate,
    optimize,
    sweep,
)
from adtarget.oracle import OracleResult, combo_oracle, subset_oracle

__version__ = "0.1.0"

__all__ = [
    "APPENDIX_SCHEMA",
    "CandidateFamily",
    "DomainError",
    "FeatureStats",
    "MckpInstance",
    "MckpItem",
    "MckpSolution",
    "OracleResult",
    "ParseError",
    "PrefixCandidate",
    "SchemaError",
    "StatsDataset",
    "Strategy",
    "SweepResult",
    "TypeStat",
    "ValidationReport",
    "build_family",
    "build_instance",
    "combo_oracle",
    "correlation_report",
    "evaluate",
    "fast_path",
    "generate_synthetic",
    "greedy_subproblem",
    "load_dataset",
    "optimize",
    "prune",
    "rank_types",
    "serialize_dataset",
    "solve_exact",
    "solve_lp",
    "subset_oracle",
    "sweep",
    "validate",
]
