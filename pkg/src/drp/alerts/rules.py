"""Threshold alert rules with analyzer auto-trigger bindings.

Rules evaluate on an explicit tick against the timeseries store: the mean
of the matching points over the trailing window is compared to the
threshold. A firing creates an Alert whose context hints come from the
rule filters, suppressed inside the refractory period. Rules bound to an
analyzer build that analyzer's inputs from a small template language and
submit a diagnose request, so findings land back on the alert without a
human in the loop.

Template selectors (context key -> alert field):
    "alert_id" | "metric" | "fired_at" | "threshold"
    "filter:<name>"  value of one rule/alert filter
    "hint:<name>"    value of one context hint
    "const:<value>"  literal string
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from ..core.errors import DrpError, InvariantViolation
from ..core.types import Alert, AlertAnnotation, Direction
from ..telemetry.queries import Agg, TimeRange, TimeseriesQuery
from ..telemetry.stores import AlertStore, TimeseriesStore, UnknownMetric


@dataclass(frozen=True)
class AnalyzerBinding:
    analyzer_id: str
    template: Mapping[str, str] = field(default_factory=dict)
    postprocessor_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "template", dict(self.template))
        object.__setattr__(self, "postprocessor_ids", tuple(self.postprocessor_ids))


@dataclass(frozen=True)
class AlertRule:
    rule_id: str
    metric: str
    filters: Mapping[str, str]
    threshold: float
    direction: Direction
    window_ms: int
    binding: Optional[AnalyzerBinding] = None

    def __post_init__(self):
        object.__setattr__(self, "filters", dict(self.filters))
        if self.window_ms <= 0:
            raise InvariantViolation("window_ms must be > 0")


def rule_from_obj(obj: Mapping) -> AlertRule:
    binding = None
    raw = obj.get("analyzer_binding")
    if raw:
        binding = AnalyzerBinding(
            analyzer_id=raw["analyzer_id"],
            template=raw.get("template", {}),
            postprocessor_ids=tuple(raw.get("postprocessor_ids", ())),
        )
    return AlertRule(
        rule_id=obj["rule_id"],
        metric=obj["metric"],
        filters=obj.get("filters", {}),
        threshold=float(obj["threshold"]),
        direction=Direction(obj["direction"]),
        window_ms=int(obj["window_ms"]),
        binding=binding,
    )


def rule_to_obj(rule: AlertRule) -> dict:
    obj = {
        "rule_id": rule.rule_id,
        "metric": rule.metric,
        "filters": dict(rule.filters),
        "threshold": rule.threshold,
        "direction": rule.direction.value,
        "window_ms": rule.window_ms,
    }
    if rule.binding:
        obj["analyzer_binding"] = {
            "analyzer_id": rule.binding.analyzer_id,
            "template": dict(rule.binding.template),
            "postprocessor_ids": list(rule.binding.postprocessor_ids),
        }
    return obj


def build_inputs(template: Mapping[str, str], alert: Alert) -> dict[str, str]:
    """Materialize raw analyzer inputs from a binding template."""
    out: dict[str, str] = {}
    for key, selector in template.items():
        if selector == "alert_id":
            out[key] = alert.alert_id
        elif selector == "metric":
            out[key] = alert.metric
        elif selector == "fired_at":
            out[key] = str(alert.fired_at)
        elif selector == "threshold":
            out[key] = str(alert.threshold)
        elif selector.startswith("filter:"):
            name = selector.split(":", 1)[1]
            if name in alert.filters:
                out[key] = alert.filters[name]
        elif selector.startswith("hint:"):
            name = selector.split(":", 1)[1]
            if name in alert.context_hints:
                out[key] = alert.context_hints[name]
        elif selector.startswith("const:"):
            out[key] = selector.split(":", 1)[1]
        else:
            raise DrpError(f"unknown template selector {selector!r} for key {key!r}")
    return out


SubmitFn = Callable[[str, Mapping[str, str], tuple[str, ...]], str]
DescribeFn = Callable[[str], object]

DEFAULT_POSTPROCESSOR = "annotate_alert"


class AlertEngine:
    """Evaluates registered rules on explicit ticks and auto-triggers analyzers."""

    def __init__(
        self,
        timeseries: TimeseriesStore,
        alerts: AlertStore,
        submit: Optional[SubmitFn] = None,
        describe: Optional[DescribeFn] = None,
    ):
        self.timeseries = timeseries
        self.alerts = alerts
        self.submit = submit
        self.describe = describe
        self._lock = threading.Lock()
        self._rules: dict[str, AlertRule] = {}
        self._last_fired: dict[str, int] = {}
        self._fire_counts: dict[str, int] = {}
        self.submitted: dict[str, str] = {}  # alert_id -> request_id

    def add_rule(self, rule: AlertRule) -> None:
        if rule.binding is not None and self.describe is not None:
            try:
                descriptor = self.describe(rule.binding.analyzer_id)
            except DrpError:
                descriptor = None  # not registered yet; fire-time submit re-checks
            if descriptor is not None:
                schema_names = {p.name for p in descriptor.input_schema.params}
                unknown = set(rule.binding.template) - schema_names
                if unknown:
                    raise InvariantViolation(
                        f"template keys {sorted(unknown)} not in analyzer "
                        f"{rule.binding.analyzer_id!r} input schema"
                    )
        with self._lock:
            self._rules[rule.rule_id] = rule

    def rules(self) -> list[AlertRule]:
        with self._lock:
            return list(self._rules.values())

    def evaluate_rules(self, now: int) -> list[Alert]:
        """One evaluation tick; returns the alerts fired on this tick."""
        fired: list[Alert] = []
        for rule in self.rules():
            with self._lock:
                last = self._last_fired.get(rule.rule_id)
            if last is not None and now - last < rule.window_ms:  # refractory
                continue
            value = self._window_mean(rule, now)
            if value is None:
                continue
            crossed = (
                value > rule.threshold
                if rule.direction is Direction.ABOVE
                else value < rule.threshold
            )
            if not crossed:
                continue
            with self._lock:
                self._last_fired[rule.rule_id] = now
                self._fire_counts[rule.rule_id] = self._fire_counts.get(rule.rule_id, 0) + 1
                count = self._fire_counts[rule.rule_id]
            alert = Alert(
                alert_id=f"{rule.rule_id}-fire-{count}",
                metric=rule.metric,
                filters=rule.filters,
                threshold=rule.threshold,
                direction=rule.direction,
                window_ms=rule.window_ms,
                fired_at=now,
                context_hints=dict(rule.filters),
            )
            self.alerts.ingest_alert(alert)
            fired.append(alert)
            if rule.binding is not None:
                self.on_alert_fire(alert, rule)
        return fired

    def _window_mean(self, rule: AlertRule, now: int) -> Optional[float]:
        # SUM and COUNT across buckets give the exact mean of the window's
        # points, independent of bucket alignment
        window = TimeRange(now - rule.window_ms, now)

        def total(agg: Agg) -> float:
            result = self.timeseries.query_timeseries(
                TimeseriesQuery(
                    metric=rule.metric,
                    range=window,
                    filters=rule.filters,
                    agg=agg,
                    step_ms=rule.window_ms,
                )
            )
            return sum(v for series in result.values() for _, v in series)

        try:
            count = total(Agg.COUNT)
        except UnknownMetric:
            return None
        if count == 0:
            return None
        return total(Agg.SUM) / count

    def on_alert_fire(self, alert: Alert, rule: AlertRule) -> Optional[str]:
        """Submit the bound analyzer; submission errors land on the alert."""
        if rule.binding is None or self.submit is None:
            return None
        raw_inputs = build_inputs(rule.binding.template, alert)
        postprocessors = rule.binding.postprocessor_ids
        if DEFAULT_POSTPROCESSOR not in postprocessors:
            postprocessors = postprocessors + (DEFAULT_POSTPROCESSOR,)
        try:
            request_id = self.submit(rule.binding.analyzer_id, raw_inputs, postprocessors)
        except DrpError as exc:
            self.alerts.annotate(
                alert.alert_id,
                AlertAnnotation(
                    author="drp",
                    ts=alert.fired_at,
                    text=f"automation failed: {exc}",
                    source_request_id=f"auto-fail-{alert.alert_id}",
                ),
            )
            return None
        with self._lock:
            self.submitted[alert.alert_id] = request_id
        return request_id
