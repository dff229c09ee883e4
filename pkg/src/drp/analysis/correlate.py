"""Lag-scanned Pearson correlation between a target series and candidates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..core.errors import DrpError

Series = Sequence[tuple[int, float]]


class GridMismatch(DrpError):
    """Series are not aligned to a common step grid."""


@dataclass(frozen=True)
class CorrelationResult:
    candidate_key: str
    r: float
    best_lag_ms: int
    n: int  # overlapping samples at the best lag


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Plain textbook Pearson correlation; caller guarantees variance > 0."""
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    cov = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = math.fsum((x - mx) ** 2 for x in xs)
    vy = math.fsum((y - my) ** 2 for y in ys)
    return cov / math.sqrt(vx * vy)


def _step_of(series: Series, label: str) -> int:
    if len(series) < 2:
        raise GridMismatch(f"{label} has fewer than 2 points")
    gaps = {b - a for (a, _), (b, _) in zip(series, series[1:])}
    if len(gaps) != 1:
        raise GridMismatch(f"{label} is not on a uniform grid (gaps {sorted(gaps)})")
    return gaps.pop()


def correlate(
    target: Series,
    candidates: Mapping[str, Series],
    max_lag_ms: int,
    min_overlap: int = 20,
) -> list[CorrelationResult]:
    """Best-|r| lag per candidate within +/-max_lag_ms, sorted by |r| descending.

    A positive best_lag_ms means the candidate trails the target by that
    long. Candidates whose best-lag overlap is below min_overlap, or whose
    overlapping values have zero variance, are omitted. Ties in |r| resolve
    toward smaller |lag|, then lexicographic candidate key.
    """
    step = _step_of(target, "target")
    target_at = dict(target)
    max_steps = max_lag_ms // step
    lags = sorted(range(-max_steps, max_steps + 1), key=lambda s: (abs(s), s))

    results: list[CorrelationResult] = []
    for key in sorted(candidates):
        series = candidates[key]
        cand_step = _step_of(series, f"candidate {key!r}")
        if cand_step != step:
            raise GridMismatch(
                f"candidate {key!r} step {cand_step} != target step {step}"
            )
        cand_at = dict(series)
        best: tuple[float, int, float, int] | None = None  # (|r|, -|lag|... ) handled below
        for lag_steps in lags:
            lag_ms = lag_steps * step
            xs, ys = [], []
            for ts, tv in target:
                cv = cand_at.get(ts + lag_ms)
                if cv is not None:
                    xs.append(tv)
                    ys.append(cv)
            if len(xs) < min_overlap:
                continue
            if len(set(xs)) < 2 or len(set(ys)) < 2:
                continue
            r = pearson(xs, ys)
            if best is None or abs(r) > best[0]:
                best = (abs(r), lag_ms, r, len(xs))
        if best is not None:
            results.append(
                CorrelationResult(candidate_key=key, r=best[2], best_lag_ms=best[1], n=best[3])
            )
    results.sort(key=lambda c: (-abs(c.r), abs(c.best_lag_ms), c.candidate_key))
    return results
