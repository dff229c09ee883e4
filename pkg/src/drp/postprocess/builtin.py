"""Post-processors shipped with the framework."""

from __future__ import annotations

from ..core.types import DiagnoseRequest, Findings
from ..sdk.analyzer import Action, ActionKind, PostProcessor


class AnnotateAlertProcessor(PostProcessor):
    """Writes the findings summary onto the alert named in the request context."""

    id = "annotate_alert"
    stateful = False

    def process(self, findings: Findings, request: DiagnoseRequest) -> list[Action]:
        alert_id = request.context.value_of("alert_id")
        if not alert_id:
            return []
        return [Action(ActionKind.ANNOTATE_ALERT, {"alert_id": alert_id})]


class CreateTaskProcessor(PostProcessor):
    """Opens a follow-up task when the analysis found an issue."""

    id = "create_task"
    stateful = True  # task systems are not idempotent; one shot only

    def process(self, findings: Findings, request: DiagnoseRequest) -> list[Action]:
        from ..core.types import FindingStatus

        if findings.status is not FindingStatus.ISSUE_FOUND:
            return []
        return [
            Action(
                ActionKind.CREATE_TASK,
                {"title": f"[auto] {findings.summary}"[:120], "body": findings.summary},
            )
        ]


class NotifyProcessor(PostProcessor):
    id = "notify"
    stateful = False

    def process(self, findings: Findings, request: DiagnoseRequest) -> list[Action]:
        return [Action(ActionKind.NOTIFY, {"text": findings.summary})]


def register_builtin(registry) -> None:
    registry.register(AnnotateAlertProcessor())
    registry.register(CreateTaskProcessor())
    registry.register(NotifyProcessor())
