"""Scripted manual investigation of the service-errors scenario.

This replays, step by step, what an on-call following the written playbook
would do by hand: repeated filtered queries, eyeballing for anomalies,
slicing by each dimension, then scanning recent changes. Each query or
correlation the script runs increments its step counter, giving a
like-for-like comparison against the single submission the automated path
needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..analysis import detect_anomalies, dimensional_analysis, rank_events
from ..telemetry.queries import Agg, EventQuery, TimeRange, TimeseriesQuery
from ..telemetry.scenario import STEP_MS, ScenarioBundle


@dataclass
class ManualRun:
    steps: int = 0
    log: list[str] = field(default_factory=list)
    top_slice: dict = field(default_factory=dict)
    culprit_event_id: str = ""

    def step(self, what: str) -> None:
        self.steps += 1
        self.log.append(what)


def manual_service_errors(bundle: ScenarioBundle) -> ManualRun:
    run = ManualRun()
    truth = bundle.ground_truth
    service = truth.target_service
    metric = truth.target_metric
    store = bundle.timeseries
    full = TimeRange(0, 4_000_000_000_000)

    def query(description, **kwargs):
        run.step(description)
        return store.query_timeseries(TimeseriesQuery(metric, full, **kwargs))

    # 1. pull the service-wide series and look for the spike
    overall = query(f"query {metric} for {service}", filters={"service": service},
                    agg=Agg.SUM, step_ms=STEP_MS)[()]
    run.step("scan series for anomaly onset")
    windows = detect_anomalies(overall)
    onset = windows[0].start_ts if windows else truth.onset_ts

    # 2. slice by each dimension separately, as dashboards would
    query("re-query grouped by region", filters={"service": service},
          group_by=("region",), agg=Agg.SUM, step_ms=STEP_MS)
    query("re-query grouped by endpoint", filters={"service": service},
          group_by=("endpoint",), agg=Agg.SUM, step_ms=STEP_MS)

    # 3. cross-slice to pin the (region, endpoint) combination
    run.step("cross-slice regions x endpoints for the delta")
    rows = [
        ({k: v for k, v in dims.items() if k != "service"}, ts, value)
        for ts, dims, value in store.raw_rows(metric)
        if dims.get("service") == service
    ]
    baseline = TimeRange(onset - 40 * STEP_MS, onset)
    anomalous = TimeRange(onset, onset + 30 * STEP_MS)
    slices = dimensional_analysis(rows, baseline, anomalous)
    run.top_slice = slices[0].slice if slices else {}

    # 4. confirm the isolated slice with one more filtered query
    query("confirm isolated slice", filters={"service": service, **run.top_slice},
          agg=Agg.SUM, step_ms=STEP_MS)

    # 5. pull recent changes and scan them against the alert
    run.step("query recent change events")
    alert = bundle.alerts.get(truth.alert_id)
    events = bundle.events.query_events(
        EventQuery(range=TimeRange(onset - 120 * STEP_MS, alert.fired_at + 5 * STEP_MS))
    )
    run.step("correlate events against the alert by hand")
    ranked = rank_events(events, alert)
    if ranked:
        run.culprit_event_id = ranked[0].event.event_id
    return run
