"""Rolling median/MAD anomaly detection over evenly spaced series."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from statistics import median
from typing import Sequence

from ..core.errors import DrpError, InvariantViolation

MAD_SCALE = 1.4826  # MAD -> sigma under normality
MAD_EPSILON = 1e-9


class InsufficientData(DrpError):
    def __init__(self, n: int, required: int):
        super().__init__(f"series has {n} points, detector needs at least {required}")
        self.n = n
        self.required = required


class AnomalyDirection(str, Enum):
    UP = "UP"
    DOWN = "DOWN"


@dataclass(frozen=True)
class AnomalyWindow:
    start_ts: int
    end_ts: int
    peak_deviation: float  # robust-sigma units
    direction: AnomalyDirection

    def __post_init__(self):
        if self.start_ts > self.end_ts:
            raise InvariantViolation("anomaly window start must not exceed end")


def detect_anomalies(
    series: Sequence[tuple[int, float]],
    window_n: int = 30,
    k: float = 3.0,
) -> list[AnomalyWindow]:
    """Flag points deviating more than k robust sigmas from the trailing window.

    The rolling median and MAD are taken over the window_n points strictly
    before each point; deviations are |x - median| / (1.4826 * MAD), so the
    output is invariant under positive affine transforms of the series.
    A constant trailing window gets MAD = 1e-9 instead of zero. Consecutive
    anomalous points merge into a single window whose direction follows its
    peak deviation.
    """
    n = len(series)
    if n < 2 * window_n:
        raise InsufficientData(n, 2 * window_n)
    timestamps = [ts for ts, _ in series]
    if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
        raise InvariantViolation("series timestamps must be strictly ascending")
    values = [v for _, v in series]

    flagged: list[tuple[int, float]] = []  # (index, signed deviation)
    for i in range(window_n, n):
        window = values[i - window_n : i]
        med = median(window)
        mad = median(abs(v - med) for v in window)
        if mad == 0.0:
            mad = MAD_EPSILON
        deviation = (values[i] - med) / (MAD_SCALE * mad)
        if abs(deviation) > k:
            flagged.append((i, deviation))

    windows: list[AnomalyWindow] = []
    run: list[tuple[int, float]] = []
    for idx, dev in flagged:
        if run and idx == run[-1][0] + 1:
            run.append((idx, dev))
        else:
            if run:
                windows.append(_close_run(run, timestamps))
            run = [(idx, dev)]
    if run:
        windows.append(_close_run(run, timestamps))
    return windows


def _close_run(run: list[tuple[int, float]], timestamps: list[int]) -> AnomalyWindow:
    peak_idx, peak_dev = max(run, key=lambda pair: abs(pair[1]))
    return AnomalyWindow(
        start_ts=timestamps[run[0][0]],
        end_ts=timestamps[run[-1][0]],
        peak_deviation=abs(peak_dev),
        direction=AnomalyDirection.UP if peak_dev > 0 else AnomalyDirection.DOWN,
    )
