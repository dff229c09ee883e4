"""Investigation algorithms: anomaly detection, correlation, drill-down, event ranking."""

from .anomaly import (
    MAD_EPSILON,
    MAD_SCALE,
    AnomalyDirection,
    AnomalyWindow,
    InsufficientData,
    detect_anomalies,
)
from .correlate import CorrelationResult, GridMismatch, correlate, pearson
from .drilldown import (
    BEAM_WIDTH,
    SliceResult,
    ZeroDelta,
    dimensional_analysis,
    slice_order_key,
    suppress_parents,
)
from .events import (
    CONTEXT_KEYS,
    FUTURE_GRACE_MS,
    HIGH_CUT,
    MEDIUM_CUT,
    TAU_MS,
    EmptyInput,
    RankedEvent,
    rank_events,
    tfidf_cosine,
    tokenize,
)

__all__ = [
    "AnomalyDirection",
    "AnomalyWindow",
    "BEAM_WIDTH",
    "CONTEXT_KEYS",
    "CorrelationResult",
    "EmptyInput",
    "FUTURE_GRACE_MS",
    "GridMismatch",
    "HIGH_CUT",
    "InsufficientData",
    "MAD_EPSILON",
    "MAD_SCALE",
    "MEDIUM_CUT",
    "RankedEvent",
    "SliceResult",
    "TAU_MS",
    "ZeroDelta",
    "correlate",
    "detect_anomalies",
    "dimensional_analysis",
    "pearson",
    "rank_events",
    "slice_order_key",
    "suppress_parents",
    "tfidf_cosine",
    "tokenize",
]
