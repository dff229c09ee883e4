"""Subprocess analyzer runner.

Protocol: one JSON object per line on stdin
    {"request_id", "analyzer_id", "context": <context wire obj>, "data_dir"}
one JSON object per line on stdout
    {"status": "SUCCESS"|"FAILED", "findings"?: <findings wire obj>,
     "error"?: {"class", "message"}, "trace": [...], "chain": [...]}
Exit code is 0 iff a response line was written. Extra response fields are
additive; consumers must ignore unknown ones.

Launched as: python -m drp.backend.subproc <bundle-artifact-path>
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from ..core.codec import context_from_obj, context_to_obj, findings_to_obj
from ..core.errors import StorageError, ValidationError
from ..sdk.registry import UnknownAnalyzer
from ..sdk.toolkit import ChildFailed, LiveDataSource, Toolkit, TraceRecorder
from ..telemetry.stores import AlertStore, EventStore, TimeseriesStore, UnknownMetric
from .bundles import FetchError, load_bundle_analyzers
from .results import ErrorClass, TraceUnavailable


def classify_exception(exc: BaseException) -> ErrorClass:
    """Map an exception to the error taxonomy driving retries and backtests."""
    while isinstance(exc, ChildFailed):  # chained-child failures keep their class
        exc = exc.cause
    if isinstance(exc, ValidationError):
        return ErrorClass.VALIDATION
    if isinstance(exc, (StorageError, FetchError, UnknownMetric, TraceUnavailable, OSError)):
        return ErrorClass.INFRA
    return ErrorClass.ANALYZER_EXCEPTION


def run_request(artifact_path: str, request_line: str) -> dict:
    request = json.loads(request_line)
    context = context_from_obj(request["context"])
    data_dir = Path(request["data_dir"])
    analyzers = load_bundle_analyzers(Path(artifact_path))
    analyzer = analyzers.get(request["analyzer_id"])
    if analyzer is None:
        raise UnknownAnalyzer(request["analyzer_id"])

    source = LiveDataSource(
        TimeseriesStore(data_dir / "telemetry" / "points.jsonl"),
        EventStore(data_dir / "telemetry" / "events.jsonl"),
        AlertStore(data_dir / "telemetry" / "alerts.jsonl"),
    )

    def resolver(analyzer_id: str):
        impl = analyzers.get(analyzer_id)
        if impl is None:
            raise UnknownAnalyzer(analyzer_id)
        return impl

    trace = TraceRecorder()
    child_runs: list[dict] = []

    def chain_sink(child_id, ref, ctx, findings, error_message, runtime_ms):
        child_runs.append(
            {
                "child_id": child_id,
                "ref": ref,
                "context": context_to_obj(ctx),
                "findings": findings_to_obj(findings) if findings is not None else None,
                "error": error_message,
                "runtime_ms": runtime_ms,
            }
        )

    toolkit = Toolkit(
        context=context,
        source=source,
        resolver=resolver,
        request_id=request["request_id"],
        trace=trace,
        call_stack=(request["analyzer_id"],),
        chain_sink=chain_sink,
    )
    try:
        findings = analyzer.analyze(context, toolkit)
        return {
            "status": "SUCCESS",
            "findings": findings_to_obj(findings),
            "trace": trace.entries,
            "chain": toolkit.chain_records,
            "child_runs": child_runs,
        }
    except BaseException as exc:
        return {
            "status": "FAILED",
            "error": {"class": classify_exception(exc).value, "message": str(exc)},
            "trace": trace.entries,
            "chain": toolkit.chain_records,
            "child_runs": child_runs,
        }


def main(argv: list[str]) -> int:
    if len(argv) != 2:
        print("usage: python -m drp.backend.subproc <bundle-artifact>", file=sys.stderr)
        return 2
    line = sys.stdin.readline()
    if not line.strip():
        print("no request line on stdin", file=sys.stderr)
        return 2
    try:
        response = run_request(argv[1], line)
    except Exception as exc:
        print(f"request could not be served: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(json.dumps(response, separators=(",", ":")) + "\n")
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
