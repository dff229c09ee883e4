"""CI gate: turn a backtest report into an exit status and summary."""

from __future__ import annotations

import importlib
import importlib.util
import sys
from pathlib import Path

from ..core.errors import DrpError
from ..sdk.analyzer import Analyzer
from .replay import BacktestReport, Gate, Verdict


def ci_gate(report: BacktestReport) -> tuple[int, str]:
    """Nonzero exit iff the gate blocks; summary lists each logic failure."""
    lines = [
        f"backtest {report.analyzer_id} candidate={report.candidate_version} "
        f"window={report.window_days}d cases={len(report.cases)} gate={report.gate.value}"
    ]
    if report.warning:
        lines.append(f"warning: {report.warning}")
    passed = sum(1 for c in report.cases if c.verdict is Verdict.PASS)
    skipped = sum(1 for c in report.cases if c.verdict is Verdict.SKIPPED_INFRA)
    failed = [c for c in report.cases if c.verdict is Verdict.LOGIC_FAIL]
    lines.append(f"pass={passed} skipped_infra={skipped} logic_fail={len(failed)}")
    for case in failed:
        lines.append(f"LOGIC_FAIL {case.request_id}: {case.detail}")
    exit_code = 1 if report.gate is Gate.BLOCK else 0
    return exit_code, "\n".join(lines)


def load_candidate(spec: str) -> Analyzer:
    """Load a candidate analyzer from "module:Class" or a .py file path.

    A file may expose a module-level ANALYZER instance or exactly one
    Analyzer subclass.
    """
    if ":" in spec and not spec.endswith(".py"):
        module_name, _, class_name = spec.partition(":")
        try:
            cls = getattr(importlib.import_module(module_name), class_name)
        except (ImportError, AttributeError) as exc:
            raise DrpError(f"cannot load candidate {spec!r}: {exc}")
        return cls()
    path = Path(spec)
    if not path.exists():
        raise DrpError(f"candidate file not found: {spec}")
    module_spec = importlib.util.spec_from_file_location(f"candidate_{path.stem}", path)
    module = importlib.util.module_from_spec(module_spec)
    sys.modules[module_spec.name] = module
    module_spec.loader.exec_module(module)
    analyzer = getattr(module, "ANALYZER", None)
    if isinstance(analyzer, Analyzer):
        return analyzer
    subclasses = [
        obj for obj in vars(module).values()
        if isinstance(obj, type) and issubclass(obj, Analyzer) and obj is not Analyzer
    ]
    if len(subclasses) != 1:
        raise DrpError(
            f"{spec} must expose ANALYZER or exactly one Analyzer subclass "
            f"(found {len(subclasses)})"
        )
    return subclasses[0]()
