"""Stub analyzers and post-processors for tests and demos.

These are importable by module path, so they work through bundle
artifacts and the subprocess runner, not just in-process.
"""

from __future__ import annotations

import time

from .core.types import (
    AnalyzerDescriptor,
    Context,
    ContextValue,
    Findings,
    FindingStatus,
    InputSchema,
    SchemaParam,
    ValueTag,
)
from .sdk.analyzer import Analyzer, PostProcessor
from .sdk.toolkit import Toolkit


class EchoAnalyzer(Analyzer):
    """Returns OK immediately; echoes its context into a section."""

    analyzer_id = "echo"
    allowlisted = True

    def __init__(self, timeout_ms: int = 10_000):
        self.timeout_ms = timeout_ms

    def describe(self) -> AnalyzerDescriptor:
        return AnalyzerDescriptor(
            analyzer_id=self.analyzer_id,
            version="1.0.0",
            group_id="testing",
            input_schema=InputSchema(
                (
                    SchemaParam("service", ValueTag.STRING),
                    SchemaParam("alert_id", ValueTag.STRING),
                )
            ),
            allowlisted=self.allowlisted,
            timeout_ms=self.timeout_ms,
        )

    def analyze(self, ctx: Context, toolkit: Toolkit) -> Findings:
        data = {key: str(value.value) for key, value in ctx.items()}
        return (
            toolkit.findings(FindingStatus.OK)
            .set_summary("echo ok")
            .add_key_value("inputs", data)
            .build()
        )


class SubprocessEchoAnalyzer(EchoAnalyzer):
    analyzer_id = "echo_sub"
    allowlisted = False


class SleeperAnalyzer(Analyzer):
    """Sleeps sleep_ms before returning OK; used for timeout and DAG tests."""

    analyzer_id = "sleeper"
    allowlisted = True

    def describe(self) -> AnalyzerDescriptor:
        return AnalyzerDescriptor(
            analyzer_id=self.analyzer_id,
            version="1.0.0",
            group_id="testing",
            input_schema=InputSchema(
                (SchemaParam("sleep_ms", ValueTag.INT, default=ContextValue.of_int(50)),)
            ),
            allowlisted=self.allowlisted,
            timeout_ms=1_000,
        )

    def analyze(self, ctx: Context, toolkit: Toolkit) -> Findings:
        time.sleep(ctx.value_of("sleep_ms", 50) / 1000.0)
        return toolkit.findings(FindingStatus.OK).set_summary("slept").build()


class SubprocessSleeperAnalyzer(SleeperAnalyzer):
    analyzer_id = "sleeper_sub"
    allowlisted = False


class FlakyAnalyzer(Analyzer):
    """Fails with an exception until attempt >= succeed_on_attempt."""

    analyzer_id = "flaky"
    _attempts_seen: dict[str, int] = {}

    def describe(self) -> AnalyzerDescriptor:
        return AnalyzerDescriptor(
            analyzer_id=self.analyzer_id,
            version="1.0.0",
            group_id="testing",
            input_schema=InputSchema(
                (SchemaParam("succeed_on_attempt", ValueTag.INT,
                             default=ContextValue.of_int(3)),)
            ),
            allowlisted=True,
            timeout_ms=10_000,
        )

    def analyze(self, ctx: Context, toolkit: Toolkit) -> Findings:
        key = toolkit.request_id
        seen = self._attempts_seen.get(key, 0) + 1
        self._attempts_seen[key] = seen
        target = ctx.value_of("succeed_on_attempt", 3)
        if seen < target:
            raise RuntimeError(f"attempt {seen} fails by design")
        return toolkit.findings(FindingStatus.OK).set_summary(f"attempt {seen} ok").build()


class FailingPostProcessor(PostProcessor):
    """Raises until its invocation count reaches succeed_on; counts calls."""

    def __init__(self, pp_id: str = "failing_pp", stateful: bool = False, succeed_on: int = 3):
        self.id = pp_id
        self.stateful = stateful
        self.succeed_on = succeed_on
        self.calls = 0

    def process(self, findings, request):
        self.calls += 1
        if self.calls < self.succeed_on:
            raise RuntimeError(f"call {self.calls} fails by design")
        return []
