"""Pre-aggregation layer: collapse raw points into coarse SUM/COUNT rollups.

A rollup keeps one row per (window, kept-dimension values) combination.
Queries whose group_by and filters stay inside the kept dimensions, whose
step is a multiple of the rollup window, and whose range is window-aligned
are answered from the rollup alone; SUM and COUNT come back exactly equal
to the raw-store answer, AVG as their quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..core.errors import DrpError, InvariantViolation
from .queries import Agg, RollupConfig, TimeseriesQuery
from .stores import TimeseriesStore


class RollupUnanswerable(DrpError):
    """The query needs data the rollup did not keep."""


@dataclass
class RollupHandle:
    metric: str
    config: RollupConfig
    # (window_start, kept-dim values) -> [sum, count]
    rows: dict[tuple[int, tuple[str, ...]], list[float]]
    raw_row_count: int

    @property
    def rollup_row_count(self) -> int:
        return len(self.rows)

    @property
    def reduction_ratio(self) -> float:
        return self.raw_row_count / max(1, self.rollup_row_count)

    def can_answer(self, q: TimeseriesQuery) -> bool:
        kept = set(self.config.kept_dimensions)
        return (
            q.metric == self.metric
            and q.agg in (Agg.SUM, Agg.COUNT, Agg.AVG)
            and set(q.group_by) <= kept
            and set(q.filters) <= kept
            and q.step_ms % self.config.window_ms == 0
            and q.range.start_ts % self.config.window_ms == 0
            and q.range.end_ts % self.config.window_ms == 0
        )

    def query_timeseries(
        self, q: TimeseriesQuery
    ) -> dict[tuple[str, ...], list[tuple[int, float]]]:
        if not self.can_answer(q):
            raise RollupUnanswerable(f"rollup on {self.metric} cannot answer {q.fingerprint()}")
        dim_index = {d: i for i, d in enumerate(self.config.kept_dimensions)}
        grouped: dict[tuple[str, ...], dict[int, list[list[float]]]] = {}
        for (window, values), (total, count) in self.rows.items():
            if not q.range.contains(window):
                continue
            if any(values[dim_index[k]] != v for k, v in q.filters.items()):
                continue
            key = tuple(values[dim_index[d]] for d in q.group_by)
            bucket = window - window % q.step_ms
            grouped.setdefault(key, {}).setdefault(bucket, []).append([total, count])
        out: dict[tuple[str, ...], list[tuple[int, float]]] = {}
        for key, buckets in grouped.items():
            series = []
            for bucket in sorted(buckets):
                cells = buckets[bucket]
                total = math.fsum(c[0] for c in cells)
                count = int(sum(c[1] for c in cells))
                if q.agg is Agg.SUM:
                    agg = total
                elif q.agg is Agg.COUNT:
                    agg = float(count)
                else:
                    agg = total / count
                series.append((bucket, agg))
            out[key] = series
        return out


def preaggregate(store: TimeseriesStore, metric: str, config: RollupConfig) -> RollupHandle:
    """Build a rollup for a metric; reduction_ratio = raw rows / rollup rows."""
    kept = set(config.kept_dimensions)
    known = store.dimensions_of(metric)  # raises UnknownMetric
    if not kept <= known:
        raise InvariantViolation(
            f"kept_dimensions {sorted(kept - known)} not present on metric {metric!r}"
        )
    raw = store.raw_rows(metric)
    buckets: dict[tuple[int, tuple[str, ...]], list[float]] = {}
    for ts, dims, value in raw:
        window = ts - ts % config.window_ms
        key = (window, tuple(dims.get(d, "") for d in config.kept_dimensions))
        buckets.setdefault(key, []).append(value)
    # fsum per window so rollup sums match raw-query sums bit for bit
    rows = {key: [math.fsum(values), float(len(values))] for key, values in buckets.items()}
    return RollupHandle(metric=metric, config=config, rows=rows, raw_row_count=len(raw))
