"""Structured query and rollup descriptors for the telemetry stores."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from ..core.errors import InvariantViolation
from ..core.types import EventKind


class Agg(str, Enum):
    SUM = "SUM"
    AVG = "AVG"
    COUNT = "COUNT"
    P99 = "P99"


@dataclass(frozen=True)
class TimeRange:
    start_ts: int
    end_ts: int

    def __post_init__(self):
        if self.start_ts >= self.end_ts:
            raise InvariantViolation("range start must precede end")

    def contains(self, ts: int) -> bool:
        return self.start_ts <= ts < self.end_ts

    @property
    def duration_ms(self) -> int:
        return self.end_ts - self.start_ts


@dataclass(frozen=True)
class TimeseriesQuery:
    metric: str
    range: TimeRange
    filters: Mapping[str, str] = field(default_factory=dict)
    group_by: tuple[str, ...] = ()
    agg: Agg = Agg.SUM
    step_ms: int = 60_000

    def __post_init__(self):
        object.__setattr__(self, "filters", dict(self.filters))
        object.__setattr__(self, "group_by", tuple(self.group_by))
        object.__setattr__(self, "agg", Agg(self.agg))
        if self.step_ms <= 0:
            raise InvariantViolation("step_ms must be > 0")

    def fingerprint(self) -> str:
        dims = ",".join(f"{k}={v}" for k, v in sorted(self.filters.items()))
        group = ",".join(self.group_by)
        return (
            f"ts:{self.metric}:{self.range.start_ts}-{self.range.end_ts}"
            f":[{dims}]:g[{group}]:{self.agg.value}:{self.step_ms}"
        )


@dataclass(frozen=True)
class EventQuery:
    range: TimeRange
    kinds: Optional[frozenset[EventKind]] = None
    attribute_filters: Mapping[str, str] = field(default_factory=dict)
    text_query: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "attribute_filters", dict(self.attribute_filters))
        if self.kinds is not None:
            object.__setattr__(self, "kinds", frozenset(EventKind(k) for k in self.kinds))

    def fingerprint(self) -> str:
        kinds = ",".join(sorted(k.value for k in self.kinds)) if self.kinds else "*"
        attrs = ",".join(f"{k}={v}" for k, v in sorted(self.attribute_filters.items()))
        return (
            f"ev:{self.range.start_ts}-{self.range.end_ts}:k[{kinds}]"
            f":[{attrs}]:q[{self.text_query or ''}]"
        )


@dataclass(frozen=True)
class RollupConfig:
    """Pre-aggregation recipe: coarser windows, fewer dimensions, SUM+COUNT."""

    window_ms: int
    kept_dimensions: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "kept_dimensions", tuple(self.kept_dimensions))
        if self.window_ms <= 0:
            raise InvariantViolation("window_ms must be > 0")


def nearest_rank_percentile(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile (no interpolation) of a non-empty sample."""
    if not values:
        raise InvariantViolation("percentile of empty sample")
    ordered = sorted(values)
    import math

    rank = max(1, math.ceil(p / 100.0 * len(ordered)))
    return ordered[rank - 1]
