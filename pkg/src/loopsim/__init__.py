"""Deterministic feedback-loop simulator for session-based recommenders.

Replays the generate -> accept -> retrain loop over a session-event
dataset and reports how exposure concentration, catalog coverage,
popularity bias, and accuracy evolve across retraining iterations, with
or without penalty-based re-ranking countermeasures.
"""

from .engine import (
    RoundReport,
    RunManifest,
    SimulationConfig,
    compare_runs,
    comparison_csv,
    run_simulation,
)
from .errors import (
    EmptyDataset,
    InvalidInput,
    LoopsimError,
    NotFound,
    ParseError,
    SimulationAborted,
    UndefinedMetric,
)
from .ingest import (
    SynthConfig,
    dumps_events_tsv,
    generate_synthetic,
    parse_events_tsv,
    write_events_tsv,
)
from .metrics import coverage, gini, popularity_abs, popularity_rel, prf_at_k
from .recommenders import (
    CaghParams,
    RecommendationList,
    Recommender,
    SknnParams,
    make_recommender,
)
from .reranking import (
    RerankState,
    apply_penalties,
    penalty_strategy1,
    penalty_strategy2,
    update_state_after_round,
)
from .store import Event, ItemCatalog, SessionStore, recompute_catalog

__version__ = "0.1.0"

__all__ = [
    "CaghParams",
    "EmptyDataset",
    "Event",
    "InvalidInput",
    "ItemCatalog",
    "LoopsimError",
    "NotFound",
    "ParseError",
    "RecommendationList",
    "Recommender",
    "RerankState",
    "RoundReport",
    "RunManifest",
    "SessionStore",
    "SimulationAborted",
    "SimulationConfig",
    "SknnParams",
    "SynthConfig",
    "UndefinedMetric",
    "apply_penalties",
    "compare_runs",
    "comparison_csv",
    "coverage",
    "dumps_events_tsv",
    "generate_synthetic",
    "gini",
    "make_recommender",
    "parse_events_tsv",
    "penalty_strategy1",
    "penalty_strategy2",
    "popularity_abs",
    "popularity_rel",
    "prf_at_k",
    "recompute_catalog",
    "run_simulation",
    "update_state_after_round",
    "write_events_tsv",
]
