"""Authoring interfaces: analyzers, post-processors, and their actions."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any

from ..core.types import AnalyzerDescriptor, Context, DiagnoseRequest, Findings

if TYPE_CHECKING:
    from .toolkit import Toolkit


class Analyzer(ABC):
    """A codified investigation playbook.

    describe() must be constant for a given version; analyze() must route
    every data access through the toolkit so runs can be recorded and
    replayed.
    """

    @abstractmethod
    def describe(self) -> AnalyzerDescriptor:
        ...

    @abstractmethod
    def analyze(self, ctx: Context, toolkit: "Toolkit") -> Findings:
        ...


class ActionKind(str, Enum):
    ANNOTATE_ALERT = "ANNOTATE_ALERT"
    CREATE_TASK = "CREATE_TASK"
    NOTIFY = "NOTIFY"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    payload: dict[str, Any] = field(default_factory=dict)


class PostProcessor(ABC):
    """Hook running after an analysis completes, emitting side-effect actions.

    The stateful flag is declared once at registration: stateful processors
    are never retried on failure, stateless ones may be.
    """

    id: str = ""
    stateful: bool = False

    @abstractmethod
    def process(self, findings: Findings, request: DiagnoseRequest) -> list[Action]:
        ...
