"""Backtesting, canary gating, and the CI entry points."""

from .canary import CanaryDecision, CanaryReport, InsufficientTraffic, canary, in_sample
from .gate import ci_gate, load_candidate
from .replay import (
    Backtester,
    BacktestCase,
    BacktestReport,
    Gate,
    ReplayDataSource,
    ReplayMiss,
    Verdict,
)

__all__ = [
    "Backtester",
    "BacktestCase",
    "BacktestReport",
    "CanaryDecision",
    "CanaryReport",
    "Gate",
    "InsufficientTraffic",
    "ReplayDataSource",
    "ReplayMiss",
    "Verdict",
    "canary",
    "ci_gate",
    "in_sample",
    "load_candidate",
]
