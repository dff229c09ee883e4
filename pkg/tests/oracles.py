"""Independent brute-force oracles used by module and acceptance tests.

These recompute expected answers from first principles (exhaustive
enumeration, closed-form statistics) without touching the implementation's
search or bookkeeping code paths.
"""

from __future__ import annotations

import itertools
import math
from typing import Mapping, Sequence

from drp.telemetry.queries import TimeRange


def brute_force_drilldown(
    rows: Sequence[tuple[Mapping[str, str], int, float]],
    baseline: TimeRange,
    anomalous: TimeRange,
    max_depth: int,
    top_k: int,
    suppress_share: float = 0.95,
) -> list[dict[str, str]]:
    """Exhaustively enumerate every slice conjunction up to max_depth and
    rank by the same scoring law the implementation declares (share desc,
    |relative change| desc, lexicographic slice), applying the parent-
    suppression rule. Returns the top_k slices."""
    base_rows = [(d, v) for d, ts, v in rows if baseline.contains(ts)]
    anom_rows = [(d, v) for d, ts, v in rows if anomalous.contains(ts)]
    factor = anomalous.duration_ms / baseline.duration_ms
    total = math.fsum(v for _, v in anom_rows) - factor * math.fsum(v for _, v in base_rows)
    values_by_dim: dict[str, set[str]] = {}
    for d, _ in base_rows + anom_rows:
        for k, v in d.items():
            values_by_dim.setdefault(k, set()).add(v)

    def eval_slice(slc: dict[str, str]):
        bsum = math.fsum(v for d, v in base_rows if all(d.get(k) == x for k, x in slc.items()))
        asum = math.fsum(v for d, v in anom_rows if all(d.get(k) == x for k, x in slc.items()))
        delta = asum - bsum * factor
        share = min(1.0, max(0.0, delta / total))
        brate = bsum / baseline.duration_ms
        arate = asum / anomalous.duration_ms
        if brate != 0:
            rel = (arate - brate) / abs(brate)
        else:
            rel = math.inf if arate > 0 else (-math.inf if arate < 0 else 0.0)
        return share, rel

    dims = sorted(values_by_dim)
    candidates = []
    for depth in range(1, max_depth + 1):
        for dim_combo in itertools.combinations(dims, depth):
            for values in itertools.product(*(sorted(values_by_dim[d]) for d in dim_combo)):
                slc = dict(zip(dim_combo, values))
                share, rel = eval_slice(slc)
                candidates.append((slc, share, rel))

    def order_key(entry):
        slc, share, rel = entry
        rel_key = math.copysign(1e18, rel) if math.isinf(rel) else rel
        return (-share, -abs(rel_key), tuple(sorted(slc.items())))

    kept = []
    for slc, share, rel in candidates:
        items = set(slc.items())
        suppressed = any(
            items < set(other.items()) and oshare >= suppress_share * share
            for other, oshare, _ in candidates
        )
        if not suppressed:
            kept.append((slc, share, rel))
    kept.sort(key=order_key)
    return [slc for slc, _, _ in kept[:top_k]]


def pearson_oracle(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Textbook Pearson r via numpy-free arithmetic."""
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = math.sqrt(sum((x - mx) ** 2 for x in xs) * sum((y - my) ** 2 for y in ys))
    return num / den


def best_lag_oracle(
    target: Sequence[tuple[int, float]],
    candidate: Sequence[tuple[int, float]],
    step_ms: int,
    max_lag_ms: int,
    min_overlap: int,
) -> tuple[int, float] | None:
    """Scan every lag directly and return (lag_ms, r) with max |r|."""
    cand = dict(candidate)
    best = None
    max_steps = max_lag_ms // step_ms
    for lag_steps in sorted(range(-max_steps, max_steps + 1), key=lambda s: (abs(s), s)):
        lag = lag_steps * step_ms
        pairs = [(tv, cand[ts + lag]) for ts, tv in target if ts + lag in cand]
        if len(pairs) < min_overlap:
            continue
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        if len(set(xs)) < 2 or len(set(ys)) < 2:
            continue
        r = pearson_oracle(xs, ys)
        if best is None or abs(r) > abs(best[1]):
            best = (lag, r)
    return best
