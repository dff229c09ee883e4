"""Canary: shadow a candidate on a deterministic sample of traffic."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

from ..core.errors import DrpError
from ..sdk.analyzer import Analyzer
from .replay import Backtester, Verdict


class CanaryDecision(str, Enum):
    PROMOTE = "PROMOTE"
    HALT = "HALT"


class InsufficientTraffic(DrpError):
    def __init__(self, shadowed: int, min_cases: int):
        super().__init__(
            f"only {shadowed} requests were shadowed; {min_cases} needed for a decision"
        )
        self.shadowed = shadowed
        self.min_cases = min_cases


@dataclass(frozen=True)
class CanaryReport:
    decision: CanaryDecision
    shadowed: int
    logic_errors: int
    error_rate: float
    sample_fraction: float
    error_threshold: float

    def to_obj(self) -> dict:
        return {
            "decision": self.decision.value,
            "shadowed": self.shadowed,
            "logic_errors": self.logic_errors,
            "error_rate": self.error_rate,
            "sample_fraction": self.sample_fraction,
            "error_threshold": self.error_threshold,
        }


def in_sample(request_id: str, sample_fraction: float) -> bool:
    """Deterministic: the same request always routes to the same side."""
    digest = hashlib.sha256(request_id.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:8], "big") / float(1 << 64)
    return bucket < sample_fraction


def canary(
    backtester: Backtester,
    analyzer_id: str,
    candidate: Analyzer,
    sample_fraction: float = 0.05,
    error_threshold: float = 0.01,
    min_cases: int = 20,
    window_days: int = 30,
) -> CanaryReport:
    """Shadow-run the candidate on a hash-based sample of recorded traffic.

    Production results keep coming from the stored current-version runs;
    the candidate's outcomes only feed the decision. HALT leaves the
    current version serving.
    """
    if not (0 < sample_fraction <= 1):
        raise DrpError(f"sample_fraction must be in (0, 1], got {sample_fraction}")
    descriptor = candidate.describe()
    since = backtester.clock() - window_days * 24 * 60 * 60 * 1000
    history = backtester.results.query_history(analyzer_id, since_ts=since)
    sampled = [r for r in history if in_sample(r.request_id, sample_fraction)]
    shadowed = 0
    logic_errors = 0
    for record in sampled:
        case = backtester._replay_case(record, candidate, descriptor.timeout_ms)
        if case.verdict is Verdict.SKIPPED_INFRA:
            continue
        shadowed += 1
        if case.verdict is Verdict.LOGIC_FAIL:
            logic_errors += 1
    if shadowed < min_cases:
        raise InsufficientTraffic(shadowed, min_cases)
    error_rate = logic_errors / shadowed
    decision = CanaryDecision.HALT if error_rate > error_threshold else CanaryDecision.PROMOTE
    return CanaryReport(
        decision=decision,
        shadowed=shadowed,
        logic_errors=logic_errors,
        error_rate=error_rate,
        sample_fraction=sample_fraction,
        error_threshold=error_threshold,
    )
