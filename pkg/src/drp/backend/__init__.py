"""Execution service: queue, workers, sandboxed runs, bundles, results, HTTP API."""

from .bundles import (
    BundleHandle,
    BundleManifest,
    BundleResolver,
    FetchError,
    UnknownBundle,
    load_bundle_analyzers,
    write_bundle_artifact,
)
from .dag import CyclicDag, DagNode, DagPolicy, NodeOutcome, NodeStatus, run_dag
from .executor import ChildRun, ExecutionOutcome, Executor, WorkerCrash
from .queue import LeaseInterval, QueueFull, QueueStore, UnknownRequest, now_ms
from .results import (
    NON_LOGIC_CLASSES,
    ErrorClass,
    ErrorInfo,
    ResultRecord,
    ResultStore,
    TraceStore,
    TraceUnavailable,
)
from .service import DrpService, PeekResult, SyncTimeout

__all__ = [
    "BundleHandle",
    "BundleManifest",
    "BundleResolver",
    "ChildRun",
    "CyclicDag",
    "DagNode",
    "DagPolicy",
    "DrpService",
    "ErrorClass",
    "ErrorInfo",
    "ExecutionOutcome",
    "Executor",
    "FetchError",
    "LeaseInterval",
    "NodeOutcome",
    "NodeStatus",
    "NON_LOGIC_CLASSES",
    "PeekResult",
    "QueueFull",
    "QueueStore",
    "ResultRecord",
    "ResultStore",
    "SyncTimeout",
    "TraceStore",
    "TraceUnavailable",
    "UnknownBundle",
    "UnknownRequest",
    "WorkerCrash",
    "load_bundle_analyzers",
    "now_ms",
    "run_dag",
    "write_bundle_artifact",
]
