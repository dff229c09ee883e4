"""Shipped analyzers for the three demo incident scenarios.

service_errors isolates an error spike to a dimension slice and a suspect
change event; container_failures drills into pool failures and chains
service_errors for each implicated pool's owning service; ml_features
correlates prediction degradation with feature coverage and upstream
datasets, chaining the upstream-data and serving-side checks.
"""

from __future__ import annotations


from ..core.types import (
    Alert,
    AnalyzerDescriptor,
    Confidence,
    Context,
    ContextValue,
    Direction,
    Findings,
    FindingStatus,
    InputSchema,
    SchemaParam,
    ValueTag,
)
from ..analysis.anomaly import AnomalyDirection, InsufficientData
from ..sdk.analyzer import Analyzer
from ..sdk.toolkit import ChildFailed, Toolkit
from ..telemetry.queries import Agg, EventQuery, TimeRange, TimeseriesQuery
from ..telemetry.stores import UnknownMetric

STEP_MS = 60_000
GROUP_ID = "demo"
VERSION = "1.0.0"

_COMMON_PARAMS = (
    SchemaParam("metric", ValueTag.STRING, description="metric to investigate"),
    SchemaParam("alert_id", ValueTag.STRING, description="triggering alert, if any"),
    SchemaParam("fired_at", ValueTag.TIMESTAMP, description="alert firing time (ms)"),
    SchemaParam(
        "lookback_m", ValueTag.INT, default=ContextValue.of_int(120),
        description="minutes of history to inspect",
    ),
)


def _safe_query(toolkit: Toolkit, query: TimeseriesQuery):
    """Missing metrics read as empty data, not as infrastructure failures."""
    try:
        return toolkit.query_timeseries(query)
    except UnknownMetric:
        return {}


def _ranked_items(ranked, limit=5):
    items = []
    for r in ranked[:limit]:
        items.append(
            {
                "label": f"{r.event.event_id}: {r.event.title}",
                "score": round(r.score, 6),
                "kind": r.event.kind.value,
                "event_id": r.event.event_id,
                "confidence": r.confidence.value,
                "annotation": r.annotation,
            }
        )
    return items


def _window_from_context(ctx: Context, series_end: int) -> tuple[int, int]:
    fired_at = ctx.value_of("fired_at")
    lookback_ms = ctx.value_of("lookback_m", 120) * STEP_MS
    end = (fired_at + 30 * STEP_MS) if fired_at else series_end + STEP_MS
    return end - lookback_ms - 30 * STEP_MS, end


def _pseudo_alert(ctx: Context, metric: str, anomaly_ts: int) -> Alert:
    hints = {}
    for key in ("service", "region", "owner"):
        value = ctx.get(key)
        if value is not None and value.tag is ValueTag.STRING:
            hints[key] = value.value
    return Alert(
        alert_id="adhoc",
        metric=metric,
        filters=dict(hints),
        threshold=0.0,
        direction=Direction.ABOVE,
        window_ms=5 * STEP_MS,
        fired_at=anomaly_ts,
        context_hints=hints,
    )


class ServiceErrorsAnalyzer(Analyzer):
    """Investigates an error spike for one service."""

    def describe(self) -> AnalyzerDescriptor:
        return AnalyzerDescriptor(
            analyzer_id="service_errors",
            version=VERSION,
            group_id=GROUP_ID,
            input_schema=InputSchema(
                (SchemaParam("service", ValueTag.STRING, required=True),) + _COMMON_PARAMS
            ),
            allowlisted=True,
            timeout_ms=30_000,
            tags=("demo", "services"),
        )

    def analyze(self, ctx: Context, toolkit: Toolkit) -> Findings:
        service = ctx.value_of("service")
        metric = ctx.value_of("metric", "service.errors")
        probe = TimeseriesQuery(
            metric, TimeRange(0, 4_000_000_000_000), filters={"service": service},
            agg=Agg.SUM, step_ms=STEP_MS,
        )
        total = _safe_query(toolkit, probe).get((), [])
        if len(total) < 60:
            return (
                toolkit.findings(FindingStatus.INCONCLUSIVE)
                .set_summary(f"not enough data for {service} on {metric}")
                .build()
            )
        start, end = _window_from_context(ctx, total[-1][0])
        series = [(ts, v) for ts, v in total if start <= ts < end]
        try:
            windows = toolkit.detect_anomalies(series)
        except InsufficientData:
            windows = toolkit.detect_anomalies(total)
        if not windows:
            return (
                toolkit.findings(FindingStatus.INCONCLUSIVE)
                .set_summary(f"no anomaly on {metric} for service {service}")
                .add_timeseries("inspected series", series)
                .build()
            )
        window = max(windows, key=lambda w: w.peak_deviation)
        onset = window.start_ts

        baseline = TimeRange(onset - 40 * STEP_MS, onset)
        anomalous = TimeRange(onset, min(end, onset + 30 * STEP_MS))
        raw = toolkit.fetch_rows(
            metric, TimeRange(baseline.start_ts, anomalous.end_ts), {"service": service}
        )
        rows = [
            ({k: v for k, v in dims.items() if k != "service"}, ts, value)
            for dims, ts, value in raw
        ]
        slices = toolkit.dimensional_analysis(rows, baseline, anomalous)
        top = slices[0] if slices else None

        alert_id = ctx.value_of("alert_id")
        alert = toolkit.get_alert(alert_id) if alert_id else _pseudo_alert(ctx, metric, onset)
        events = toolkit.query_events(
            EventQuery(range=TimeRange(onset - 120 * STEP_MS, alert.fired_at + 5 * STEP_MS))
        )
        ranked = toolkit.rank_events(events, alert, ctx) if events else []

        child_refs: list[str] = []
        dependency = (top.slice.get("dependency") if top else None)
        if dependency:
            try:
                toolkit.chain(
                    "dependency_health", {"service": ContextValue.string(dependency)}
                )
                child_refs.append(toolkit.last_chain_ref())
            except ChildFailed:
                pass

        slice_text = (
            ", ".join(f"{k}={v}" for k, v in sorted(top.slice.items())) if top else "unknown"
        )
        suspect = ranked[0] if ranked else None
        summary = (
            f"error spike in {service} at {onset}, isolated to [{slice_text}]"
            + (f"; top suspect {suspect.event.event_id}: {suspect.event.title}" if suspect else "")
        )
        builder = (
            toolkit.findings(FindingStatus.ISSUE_FOUND)
            .set_summary(summary)
            .set_confidence(suspect.confidence if suspect else Confidence.MEDIUM)
            .add_key_value(
                "verdict",
                {
                    "service": service,
                    "metric": metric,
                    "onset_ts": onset,
                    "direction": window.direction.value,
                    "peak_deviation": round(window.peak_deviation, 3),
                    "top_slice": slice_text,
                    **({"culprit_event_id": suspect.event.event_id} if suspect else {}),
                },
            )
            .add_table(
                "slices by explained delta",
                ["slice", "explain_share", "relative_change", "support"],
                [
                    [
                        ", ".join(f"{k}={v}" for k, v in sorted(s.slice.items())),
                        round(s.explain_share, 4),
                        round(s.relative_change, 4) if s.relative_change != float("inf") else "new",
                        s.support,
                    ]
                    for s in slices
                ],
            )
        )
        if ranked:
            builder.add_ranked_list("suspect change events", _ranked_items(ranked),
                                    child_refs=child_refs)
        builder.add_timeseries(f"{metric} ({service})", series)
        return builder.build()


class DependencyHealthAnalyzer(Analyzer):
    """Quick health check of a dependency service's error metric."""

    def describe(self) -> AnalyzerDescriptor:
        return AnalyzerDescriptor(
            analyzer_id="dependency_health",
            version=VERSION,
            group_id=GROUP_ID,
            input_schema=InputSchema(
                (SchemaParam("service", ValueTag.STRING, required=True),) + _COMMON_PARAMS
            ),
            allowlisted=True,
            timeout_ms=30_000,
            tags=("demo",),
        )

    def analyze(self, ctx: Context, toolkit: Toolkit) -> Findings:
        service = ctx.value_of("service")
        metric = ctx.value_of("metric", "service.errors")
        result = _safe_query(
            toolkit,
            TimeseriesQuery(
                metric, TimeRange(0, 4_000_000_000_000), filters={"service": service},
                agg=Agg.SUM, step_ms=STEP_MS,
            ),
        ).get((), [])
        if len(result) < 60:
            return (
                toolkit.findings(FindingStatus.INCONCLUSIVE)
                .set_summary(f"not enough data for dependency {service}")
                .build()
            )
        windows = toolkit.detect_anomalies(result)
        if not windows:
            return (
                toolkit.findings(FindingStatus.OK)
                .set_summary(f"dependency {service} healthy on {metric}")
                .build()
            )
        worst = max(windows, key=lambda w: w.peak_deviation)
        return (
            toolkit.findings(FindingStatus.ISSUE_FOUND)
            .set_summary(
                f"dependency {service} shows a {worst.direction.value} anomaly "
                f"at {worst.start_ts}"
            )
            .add_timeseries(f"{metric} ({service})", result)
            .build()
        )


class ContainerFailuresAnalyzer(Analyzer):
    """Investigates container failures in shared pools, drilling into owners."""

    def describe(self) -> AnalyzerDescriptor:
        return AnalyzerDescriptor(
            analyzer_id="container_failures",
            version=VERSION,
            group_id=GROUP_ID,
            input_schema=InputSchema(_COMMON_PARAMS),
            allowlisted=True,
            timeout_ms=30_000,
            tags=("demo", "infra"),
        )

    def analyze(self, ctx: Context, toolkit: Toolkit) -> Findings:
        metric = ctx.value_of("metric", "containers.failures")
        total = _safe_query(
            toolkit,
            TimeseriesQuery(metric, TimeRange(0, 4_000_000_000_000), agg=Agg.SUM,
                            step_ms=STEP_MS),
        ).get((), [])
        if len(total) < 60:
            return (
                toolkit.findings(FindingStatus.INCONCLUSIVE)
                .set_summary(f"not enough data on {metric}")
                .build()
            )
        start, end = _window_from_context(ctx, total[-1][0])
        series = [(ts, v) for ts, v in total if start <= ts < end]
        try:
            windows = toolkit.detect_anomalies(series)
        except InsufficientData:
            windows = toolkit.detect_anomalies(total)
        if not windows:
            return (
                toolkit.findings(FindingStatus.INCONCLUSIVE)
                .set_summary(f"no anomaly on {metric}")
                .build()
            )
        window = max(windows, key=lambda w: w.peak_deviation)
        onset = window.start_ts
        baseline = TimeRange(onset - 40 * STEP_MS, onset)
        anomalous = TimeRange(onset, min(end, onset + 30 * STEP_MS))
        rows = toolkit.fetch_rows(metric, TimeRange(baseline.start_ts, anomalous.end_ts))
        slices = toolkit.dimensional_analysis(rows, baseline, anomalous)

        pools = []
        for s in slices:
            pool = s.slice.get("pool")
            if pool and pool not in pools:
                pools.append(pool)
        child_refs = []
        child_summaries = []
        for pool in pools[:2]:
            try:
                child = toolkit.chain(
                    "service_errors",
                    {
                        "service": ContextValue.string(f"svc-{pool}"),
                        "metric": ContextValue.string("service.errors"),
                    },
                )
                child_refs.append(toolkit.last_chain_ref())
                child_summaries.append(f"svc-{pool}: {child.summary}")
            except ChildFailed as exc:
                child_summaries.append(f"svc-{pool}: check failed ({exc.cause})")

        alert_id = ctx.value_of("alert_id")
        alert = toolkit.get_alert(alert_id) if alert_id else _pseudo_alert(ctx, metric, onset)
        events = toolkit.query_events(
            EventQuery(range=TimeRange(onset - 120 * STEP_MS, alert.fired_at + 5 * STEP_MS))
        )
        ranked = toolkit.rank_events(events, alert, ctx) if events else []
        suspect = ranked[0] if ranked else None

        top_pool = pools[0] if pools else "unknown"
        summary = (
            f"container failures spiking at {onset}, concentrated in pool {top_pool}"
            + (f"; top suspect {suspect.event.event_id}: {suspect.event.title}" if suspect else "")
            + ("; " + "; ".join(child_summaries) if child_summaries else "")
        )
        builder = (
            toolkit.findings(FindingStatus.ISSUE_FOUND)
            .set_summary(summary)
            .set_confidence(suspect.confidence if suspect else Confidence.MEDIUM)
            .add_key_value(
                "verdict",
                {
                    "metric": metric,
                    "onset_ts": onset,
                    "pool": top_pool,
                    **({"culprit_event_id": suspect.event.event_id} if suspect else {}),
                },
            )
            .add_table(
                "slices by explained delta",
                ["slice", "explain_share", "support"],
                [
                    [
                        ", ".join(f"{k}={v}" for k, v in sorted(s.slice.items())),
                        round(s.explain_share, 4),
                        s.support,
                    ]
                    for s in slices
                ],
            )
        )
        if ranked:
            builder.add_ranked_list("suspect change events", _ranked_items(ranked))
        if child_refs:
            builder.add_text(
                "owning service checks", "; ".join(child_summaries), child_refs=child_refs
            )
        return builder.build()


class UpstreamDataAnalyzer(Analyzer):
    """Checks an upstream dataset's row volume and finds the implicated change."""

    def describe(self) -> AnalyzerDescriptor:
        return AnalyzerDescriptor(
            analyzer_id="upstream_data",
            version=VERSION,
            group_id=GROUP_ID,
            input_schema=InputSchema(
                (SchemaParam("dataset", ValueTag.STRING, required=True),) + _COMMON_PARAMS
            ),
            allowlisted=True,
            timeout_ms=30_000,
            tags=("demo", "data"),
        )

    def analyze(self, ctx: Context, toolkit: Toolkit) -> Findings:
        dataset = ctx.value_of("dataset")
        metric = ctx.value_of("metric", "upstream.rows")
        series = _safe_query(
            toolkit,
            TimeseriesQuery(metric, TimeRange(0, 4_000_000_000_000),
                            filters={"dataset": dataset}, agg=Agg.SUM, step_ms=STEP_MS),
        ).get((), [])
        if len(series) < 60:
            return (
                toolkit.findings(FindingStatus.INCONCLUSIVE)
                .set_summary(f"not enough data for dataset {dataset}")
                .build()
            )
        windows = toolkit.detect_anomalies(series)
        if not windows:
            return (
                toolkit.findings(FindingStatus.OK)
                .set_summary(f"dataset {dataset} volume looks normal")
                .build()
            )
        window = max(windows, key=lambda w: w.peak_deviation)
        onset = window.start_ts
        alert = _pseudo_alert(ctx, metric, onset)
        alert = Alert(
            alert_id=alert.alert_id, metric=alert.metric,
            filters={"service": dataset}, threshold=alert.threshold,
            direction=Direction.BELOW, window_ms=alert.window_ms,
            fired_at=onset, context_hints={"service": dataset},
        )
        events = toolkit.query_events(
            EventQuery(range=TimeRange(onset - 120 * STEP_MS, onset + 5 * STEP_MS))
        )
        ranked = toolkit.rank_events(events, alert, ctx) if events else []
        suspect = ranked[0] if ranked else None
        summary = (
            f"dataset {dataset} rows dropped at {onset}"
            + (f"; suspect change {suspect.event.event_id}: {suspect.event.title}" if suspect else "")
        )
        builder = (
            toolkit.findings(FindingStatus.ISSUE_FOUND)
            .set_summary(summary)
            .set_confidence(suspect.confidence if suspect else Confidence.LOW)
            .add_key_value(
                "verdict",
                {
                    "dataset": dataset,
                    "onset_ts": onset,
                    "direction": window.direction.value,
                    **({"culprit_event_id": suspect.event.event_id} if suspect else {}),
                },
            )
            .add_timeseries(f"{metric} ({dataset})", series)
        )
        if ranked:
            builder.add_ranked_list("suspect change events", _ranked_items(ranked))
        return builder.build()


class MlFeaturesAnalyzer(Analyzer):
    """Investigates ML prediction degradation via feature coverage and upstreams."""

    def describe(self) -> AnalyzerDescriptor:
        return AnalyzerDescriptor(
            analyzer_id="ml_features",
            version=VERSION,
            group_id=GROUP_ID,
            input_schema=InputSchema(
                (SchemaParam("model", ValueTag.STRING, required=True),) + _COMMON_PARAMS
            ),
            allowlisted=True,
            timeout_ms=30_000,
            tags=("demo", "ml"),
        )

    def analyze(self, ctx: Context, toolkit: Toolkit) -> Findings:
        model = ctx.value_of("model")
        metric = ctx.value_of("metric", "model.prediction_score")
        prediction = _safe_query(
            toolkit,
            TimeseriesQuery(metric, TimeRange(0, 4_000_000_000_000),
                            filters={"model": model}, agg=Agg.AVG, step_ms=STEP_MS),
        ).get((), [])
        if len(prediction) < 60:
            return (
                toolkit.findings(FindingStatus.INCONCLUSIVE)
                .set_summary(f"not enough data for model {model}")
                .build()
            )
        windows = toolkit.detect_anomalies(prediction)
        down = [w for w in windows if w.direction is AnomalyDirection.DOWN]
        if not down:
            return (
                toolkit.findings(FindingStatus.INCONCLUSIVE)
                .set_summary(f"no prediction degradation for model {model}")
                .build()
            )
        onset = max(down, key=lambda w: w.peak_deviation).start_ts

        coverage = _safe_query(
            toolkit,
            TimeseriesQuery("feature.coverage", TimeRange(0, 4_000_000_000_000),
                            filters={"model": model}, group_by=("feature",),
                            agg=Agg.AVG, step_ms=STEP_MS),
        )
        candidates = {key[0]: series for key, series in coverage.items()}
        correlations = toolkit.correlate(prediction, candidates, max_lag_ms=5 * STEP_MS)
        top_feature = correlations[0].candidate_key if correlations else None

        upstream = _safe_query(
            toolkit,
            TimeseriesQuery("upstream.rows", TimeRange(0, 4_000_000_000_000),
                            group_by=("dataset",), agg=Agg.SUM, step_ms=STEP_MS),
        )
        upstream_candidates = {key[0]: series for key, series in upstream.items()}
        upstream_corr = toolkit.correlate(prediction, upstream_candidates, max_lag_ms=5 * STEP_MS)
        top_dataset = upstream_corr[0].candidate_key if upstream_corr else None

        child_refs = []
        child_summaries = []
        culprit_event_id = None
        if top_dataset:
            try:
                child = toolkit.chain(
                    "upstream_data", {"dataset": ContextValue.string(top_dataset)}
                )
                child_refs.append(toolkit.last_chain_ref())
                child_summaries.append(child.summary)
                for section in child.sections:
                    if section.payload.schema_id == "drp.kv/1":
                        culprit_event_id = section.payload.data.get("culprit_event_id")
            except ChildFailed as exc:
                child_summaries.append(f"upstream check failed: {exc.cause}")
        try:
            serving = toolkit.chain(
                "service_errors", {"service": ContextValue.string("inference")}
            )
            child_refs.append(toolkit.last_chain_ref())
            child_summaries.append(f"serving side: {serving.summary}")
        except ChildFailed as exc:
            child_summaries.append(f"serving-side check failed: {exc.cause}")

        summary = (
            f"prediction score for {model} degraded at {onset}; "
            f"feature {top_feature or 'unknown'} coverage implicated; "
            f"dataset {top_dataset or 'unknown'}"
            + (f"; upstream culprit event {culprit_event_id}" if culprit_event_id else "")
        )
        builder = (
            toolkit.findings(FindingStatus.ISSUE_FOUND)
            .set_summary(summary)
            .set_confidence(Confidence.HIGH if culprit_event_id else Confidence.MEDIUM)
            .add_key_value(
                "verdict",
                {
                    "model": model,
                    "onset_ts": onset,
                    "feature": top_feature or "",
                    "dataset": top_dataset or "",
                    **({"culprit_event_id": culprit_event_id} if culprit_event_id else {}),
                },
            )
            .add_table(
                "feature coverage correlation",
                ["feature", "r", "lag_ms", "n"],
                [[c.candidate_key, round(c.r, 4), c.best_lag_ms, c.n] for c in correlations],
            )
            .add_timeseries(f"{metric} ({model})", prediction)
        )
        if child_refs:
            builder.add_text("sub-analyses", "; ".join(child_summaries), child_refs=child_refs)
        return builder.build()


DEMO_ANALYZERS = (
    ServiceErrorsAnalyzer,
    DependencyHealthAnalyzer,
    ContainerFailuresAnalyzer,
    UpstreamDataAnalyzer,
    MlFeaturesAnalyzer,
)


def register_demo(service) -> None:
    """Register every demo analyzer with its importable subprocess entry."""
    for cls in DEMO_ANALYZERS:
        service.register_analyzer(cls(), f"drp.demo.analyzers:{cls.__name__}")
