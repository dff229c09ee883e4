"""Analyzer DAG execution on top of the queue-backed service."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from ..core.errors import DrpError
from ..core.types import Findings
from .results import ErrorInfo


class CyclicDag(DrpError):
    def __init__(self, names: Sequence[str]):
        super().__init__(f"dependency cycle through {sorted(names)}")
        self.names = sorted(names)


class DagPolicy(str, Enum):
    FAIL_FAST = "FAIL_FAST"
    CONTINUE = "CONTINUE"


class NodeStatus(str, Enum):
    SUCCESS = "SUCCESS"
    FAILED = "FAILED"
    CANCELLED = "CANCELLED"


@dataclass(frozen=True)
class DagNode:
    name: str
    analyzer_id: str
    overrides: Mapping[str, str] = field(default_factory=dict)
    depends_on: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "overrides", dict(self.overrides))
        object.__setattr__(self, "depends_on", tuple(self.depends_on))


@dataclass
class NodeOutcome:
    status: NodeStatus
    findings: Optional[Findings] = None
    error: Optional[ErrorInfo] = None
    request_id: Optional[str] = None

    def to_obj(self) -> dict:
        from ..core.codec import findings_to_obj

        return {
            "status": self.status.value,
            "findings": findings_to_obj(self.findings) if self.findings else None,
            "error": self.error.to_obj() if self.error else None,
            "request_id": self.request_id,
        }


def _validate(nodes: Sequence[DagNode]) -> dict[str, DagNode]:
    by_name = {}
    for node in nodes:
        if node.name in by_name:
            raise DrpError(f"duplicate DAG node name {node.name!r}")
        by_name[node.name] = node
    for node in nodes:
        for dep in node.depends_on:
            if dep not in by_name:
                raise DrpError(f"node {node.name!r} depends on unknown node {dep!r}")
    # Kahn's algorithm; whatever cannot be ordered sits on a cycle
    remaining = {n.name: set(n.depends_on) for n in nodes}
    ordered = []
    while remaining:
        ready = [name for name, deps in remaining.items() if not deps]
        if not ready:
            raise CyclicDag(list(remaining))
        for name in ready:
            del remaining[name]
            ordered.append(name)
        for deps in remaining.values():
            deps.difference_update(ready)
    return by_name


def run_dag(
    service,
    nodes: Sequence[DagNode],
    policy: DagPolicy = DagPolicy.FAIL_FAST,
    node_timeout_ms: int = 120_000,
) -> dict[str, NodeOutcome]:
    """Execute nodes respecting dependencies.

    Independent ready nodes are all submitted at once, so they run as
    concurrently as the worker pool allows. FAIL_FAST cancels every
    not-yet-started descendant of a failed node; CONTINUE submits every
    node whose dependencies reached a terminal state regardless of outcome.
    """
    by_name = _validate(nodes)
    children: dict[str, set[str]] = {name: set() for name in by_name}
    for node in nodes:
        for dep in node.depends_on:
            children[dep].add(node.name)

    outcomes: dict[str, NodeOutcome] = {}
    running: dict[str, str] = {}  # name -> request_id
    cancelled: set[str] = set()

    def deps_satisfied(node: DagNode) -> bool:
        for dep in node.depends_on:
            outcome = outcomes.get(dep)
            if outcome is None:
                return False
            if policy is DagPolicy.FAIL_FAST and outcome.status is not NodeStatus.SUCCESS:
                return False
            if outcome.status is NodeStatus.CANCELLED:
                return False
        return True

    def cancel_descendants(name: str) -> None:
        stack = [name]
        while stack:
            current = stack.pop()
            for child in children[current]:
                if child not in outcomes and child not in running and child not in cancelled:
                    cancelled.add(child)
                    outcomes[child] = NodeOutcome(NodeStatus.CANCELLED)
                    stack.append(child)

    while len(outcomes) < len(by_name):
        progressed = False
        for name, node in by_name.items():
            if name in outcomes or name in running or name in cancelled:
                continue
            if deps_satisfied(node):
                try:
                    request_id = service.submit_diagnose(node.analyzer_id, dict(node.overrides))
                except DrpError as exc:
                    outcomes[name] = NodeOutcome(
                        NodeStatus.FAILED,
                        error=ErrorInfo.from_obj(
                            {"class": "VALIDATION", "message": str(exc), "attempt_count": 0}
                        ),
                    )
                    if policy is DagPolicy.FAIL_FAST:
                        cancel_descendants(name)
                    progressed = True
                    continue
                running[name] = request_id
                progressed = True
        if not running:
            if not progressed:
                # nothing running and nothing newly ready: remaining nodes are blocked
                for name in list(by_name):
                    if name not in outcomes and name not in running:
                        outcomes[name] = NodeOutcome(NodeStatus.CANCELLED)
            continue
        # round-robin wait for any running node to finish
        deadline = time.time() + node_timeout_ms / 1000.0
        finished_name = None
        while finished_name is None:
            for name, request_id in list(running.items()):
                if service.wait_terminal(request_id, timeout_ms=50):
                    finished_name = name
                    break
            if finished_name is None and time.time() > deadline:
                raise DrpError("DAG nodes did not reach a terminal state in time")
        request_id = running.pop(finished_name)
        peek = service.peek_diagnose_status(request_id)
        if peek.findings is not None:
            outcomes[finished_name] = NodeOutcome(
                NodeStatus.SUCCESS, findings=peek.findings, request_id=request_id
            )
        else:
            outcomes[finished_name] = NodeOutcome(
                NodeStatus.FAILED, error=peek.error, request_id=request_id
            )
            if policy is DagPolicy.FAIL_FAST:
                cancel_descendants(finished_name)
    return outcomes
