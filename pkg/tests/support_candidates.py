"""Candidate analyzers loaded by name in backtest CLI tests."""

from drp.demo.analyzers import ServiceErrorsAnalyzer


class BrokenCandidate(ServiceErrorsAnalyzer):
    def analyze(self, ctx, toolkit):
        findings = super().analyze(ctx, toolkit)
        raise ValueError("injected logic bug")
        return findings
