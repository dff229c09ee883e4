"""Dimensional drill-down: which dimension-value slices explain a metric delta.

Rows are (dimensions, ts, value) observations falling in a baseline or an
anomalous time range. The baseline sum is rate-normalized to the anomalous
duration, and candidate slices (conjunctions of dimension=value predicates,
up to max_depth terms) are scored by the fraction of the total delta they
carry. Search is a greedy beam: depth-1 slices are scored exhaustively and
the best beam_width are extended one predicate at a time. A parent slice is
suppressed when a scored refinement carries >= 95% of its delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..core.errors import DrpError
from ..telemetry.queries import TimeRange

BEAM_WIDTH = 10
SUPPRESS_CHILD_SHARE = 0.95
ZERO_DELTA_TOLERANCE = 1e-9

Row = tuple[Mapping[str, str], int, float]  # (dimensions, ts, value)


class ZeroDelta(DrpError):
    """Baseline and anomalous windows carry the same total (within tolerance)."""


@dataclass(frozen=True)
class SliceResult:
    slice: dict[str, str]
    explain_share: float  # fraction of the total delta, clamped to [0, 1]
    relative_change: float
    support: int  # matching rows across both windows


class _Combo:
    """Accumulated sums for one distinct dimension combination."""

    __slots__ = ("dims", "base", "anom", "n")

    def __init__(self, dims: dict[str, str]):
        self.dims = dims
        self.base: list[float] = []
        self.anom: list[float] = []
        self.n = 0


def dimensional_analysis(
    rows: Iterable[Row],
    baseline: TimeRange,
    anomalous: TimeRange,
    max_depth: int = 3,
    top_k: int = 5,
    beam_width: int = BEAM_WIDTH,
) -> list[SliceResult]:
    combos: dict[tuple, _Combo] = {}
    for dims, ts, value in rows:
        in_base = baseline.contains(ts)
        if not in_base and not anomalous.contains(ts):
            continue
        key = tuple(sorted(dims.items()))
        combo = combos.get(key)
        if combo is None:
            combo = combos[key] = _Combo(dict(dims))
        (combo.base if in_base else combo.anom).append(value)
        combo.n += 1

    cells = []
    for combo in combos.values():
        cells.append(
            (combo.dims, math.fsum(combo.base), math.fsum(combo.anom), combo.n)
        )
    factor = anomalous.duration_ms / baseline.duration_ms
    total_delta = math.fsum(a for _, _, a, _ in cells) - factor * math.fsum(
        b for _, b, _, _ in cells
    )
    if abs(total_delta) <= ZERO_DELTA_TOLERANCE:
        raise ZeroDelta(f"total delta {total_delta} within tolerance")

    values_by_dim: dict[str, set[str]] = {}
    for dims, _, _, _ in cells:
        for d, v in dims.items():
            values_by_dim.setdefault(d, set()).add(v)

    def score(slc: dict[str, str]) -> SliceResult:
        base_sum = anom_sum = 0.0
        support = 0
        items = slc.items()
        for dims, b, a, n in cells:
            if all(dims.get(k) == v for k, v in items):
                base_sum += b
                anom_sum += a
                support += n
        delta = anom_sum - base_sum * factor
        share = delta / total_delta
        base_rate = base_sum / baseline.duration_ms
        anom_rate = anom_sum / anomalous.duration_ms
        if base_rate != 0:
            rel = (anom_rate - base_rate) / abs(base_rate)
        else:
            rel = math.inf if anom_rate > 0 else (-math.inf if anom_rate < 0 else 0.0)
        return SliceResult(
            slice=dict(slc),
            explain_share=min(1.0, max(0.0, share)),
            relative_change=rel,
            support=support,
        )

    scored: dict[tuple, SliceResult] = {}
    frontier: list[dict[str, str]] = [
        {dim: value}
        for dim in sorted(values_by_dim)
        for value in sorted(values_by_dim[dim])
    ]
    depth = 1
    while frontier and depth <= max_depth:
        level: list[SliceResult] = []
        for slc in frontier:
            key = _slice_key(slc)
            if key in scored:
                continue
            result = score(slc)
            scored[key] = result
            level.append(result)
        level.sort(key=slice_order_key)
        beam = [r.slice for r in level[:beam_width]]
        frontier = []
        seen: set[tuple] = set()
        for slc in beam:
            for dim in sorted(values_by_dim):
                if dim in slc:
                    continue
                for value in sorted(values_by_dim[dim]):
                    extended = dict(slc)
                    extended[dim] = value
                    key = _slice_key(extended)
                    if key not in seen and key not in scored:
                        seen.add(key)
                        frontier.append(extended)
        depth += 1

    kept = suppress_parents(list(scored.values()))
    kept.sort(key=slice_order_key)
    return kept[:top_k]


def suppress_parents(results: list[SliceResult]) -> list[SliceResult]:
    """Drop slices that one of their scored refinements mostly explains."""
    kept = []
    for candidate in results:
        cand_items = set(candidate.slice.items())
        suppressed = any(
            cand_items < set(other.slice.items())
            and other.explain_share >= SUPPRESS_CHILD_SHARE * candidate.explain_share
            for other in results
        )
        if not suppressed:
            kept.append(candidate)
    return kept


def slice_order_key(result: SliceResult) -> tuple:
    rel = result.relative_change
    rel_key = math.copysign(1e18, rel) if math.isinf(rel) else rel
    return (-result.explain_share, -abs(rel_key), _slice_key(result.slice))


def _slice_key(slc: Mapping[str, str]) -> tuple:
    return tuple(sorted(slc.items()))
