"""Seeded synthetic incident scenarios with known ground truth.

Three scenario families mirror increasingly involved investigations:
service error spikes, container failures in shared pools, and ML feature
regressions. Generation is fully deterministic for a fixed spec, baseline
series are stationary noise, and the injected fault (slice, onset,
magnitude, culprit change event) is returned as ground truth so analysis
results can be scored against it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from ..core.errors import InvariantViolation
from ..core.types import Alert, ChangeEvent, Direction, EventKind, TimeseriesPoint
from .stores import AlertStore, EventStore, TimeseriesStore

BASE_TS = 1_699_999_200_000  # fixed hour-aligned epoch so identical specs give identical bytes
STEP_MS = 60_000
FIVE_MIN_MS = 300_000


class ScenarioId(str, Enum):
    SERVICE_ERRORS = "SERVICE_ERRORS"
    CONTAINER_FAILURES = "CONTAINER_FAILURES"
    ML_FEATURES = "ML_FEATURES"


@dataclass(frozen=True)
class Scale:
    n_series: int = 9
    n_events: int = 200
    duration_ms: int = 2 * 60 * 60 * 1000


@dataclass(frozen=True)
class FaultSpec:
    slice: dict[str, str] = field(default_factory=dict)
    onset_ts: Optional[int] = None  # None -> 70% into the duration
    magnitude: float = 3.0
    culprit_event_id: str = ""


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: ScenarioId
    seed: int = 0
    scale: Scale = Scale()
    fault: FaultSpec = FaultSpec()

    def resolved_onset(self) -> int:
        if self.fault.onset_ts is not None:
            onset = self.fault.onset_ts
        else:
            onset = BASE_TS + int(self.scale.duration_ms * 0.7)
            onset -= onset % STEP_MS
        if not (BASE_TS <= onset < BASE_TS + self.scale.duration_ms):
            raise InvariantViolation("fault onset must lie inside the scenario duration")
        return onset


@dataclass(frozen=True)
class GroundTruth:
    culprit_event_id: str
    anomalous_slice: dict[str, str]
    onset_ts: int
    target_metric: str
    target_service: str
    alert_id: str
    magnitude: float

    def to_obj(self) -> dict:
        return {
            "culprit_event_id": self.culprit_event_id,
            "anomalous_slice": dict(self.anomalous_slice),
            "onset_ts": self.onset_ts,
            "target_metric": self.target_metric,
            "target_service": self.target_service,
            "alert_id": self.alert_id,
            "magnitude": self.magnitude,
        }


@dataclass
class ScenarioBundle:
    spec: ScenarioSpec
    timeseries: TimeseriesStore
    events: EventStore
    alerts: AlertStore
    ground_truth: GroundTruth
    alert_rules: list[dict]


_REGIONS = ["eu", "us", "ap"]
_ENDPOINTS = ["/buy", "/search", "/home"]
_POOLS = ["shared-1", "shared-2", "shared-3"]
_JOBS = ["web", "batch"]
_FEATURES = ["geo_signals", "click_hist", "price_feats", "user_embed"]
_DATASETS = ["geo_ingest", "click_ingest", "price_ingest"]
_DECOY_TITLES = [
    "Weekly dependency bump",
    "Refactor logging pipeline",
    "Update dashboard layout",
    "Tune cache eviction limits",
    "Add unit tests for parser",
    "Rotate TLS certificates",
    "Migrate cron to new scheduler",
    "Cleanup stale feature flags",
]
_OWNERS = ["team-alpha", "team-beta", "team-gamma", "team-delta"]


def _series_points(
    rng: np.random.Generator,
    metric: str,
    dims: dict[str, str],
    n_steps: int,
    mean: float,
    sd: float,
    fault_from_step: Optional[int],
    magnitude: float,
    down: bool = False,
) -> list[TimeseriesPoint]:
    values = rng.normal(mean, sd, n_steps)
    values = np.clip(values, mean * 0.1 if mean > 0 else 0.0, None)
    if fault_from_step is not None and magnitude > 0 and magnitude != 1.0:
        if down:
            values[fault_from_step:] = values[fault_from_step:] / magnitude
        else:
            values[fault_from_step:] = values[fault_from_step:] * magnitude
    return [
        TimeseriesPoint(metric, dims, BASE_TS + i * STEP_MS, round(float(values[i]), 6))
        for i in range(n_steps)
    ]


def _decoy_events(rng: np.random.Generator, n: int, duration_ms: int) -> list[ChangeEvent]:
    kinds = list(EventKind)
    out = []
    for i in range(n):
        ts = BASE_TS + int(rng.integers(0, duration_ms))
        kind = kinds[int(rng.integers(0, len(kinds)))]
        title = _DECOY_TITLES[int(rng.integers(0, len(_DECOY_TITLES)))]
        owner = _OWNERS[int(rng.integers(0, len(_OWNERS)))]
        region = _REGIONS[int(rng.integers(0, len(_REGIONS)))]
        out.append(
            ChangeEvent(
                event_id=f"ev-decoy-{i:04d}",
                kind=kind,
                ts=ts,
                title=f"{title} #{i}",
                text=f"routine change by {owner}",
                attributes={"service": f"svc-{int(rng.integers(0, 20)):02d}",
                            "owner": owner, "region": region},
            )
        )
    return out


def generate_scenario(spec: ScenarioSpec) -> ScenarioBundle:
    """Populate fresh in-memory stores for the given spec."""
    if spec.scenario_id is ScenarioId.SERVICE_ERRORS:
        return _gen_service_errors(spec)
    if spec.scenario_id is ScenarioId.CONTAINER_FAILURES:
        return _gen_container_failures(spec)
    return _gen_ml_features(spec)


def _stores() -> tuple[TimeseriesStore, EventStore, AlertStore]:
    return TimeseriesStore(), EventStore(), AlertStore()


def _gen_service_errors(spec: ScenarioSpec) -> ScenarioBundle:
    rng = np.random.default_rng(spec.seed)
    ts_store, ev_store, alert_store = _stores()
    onset = spec.resolved_onset()
    n_steps = spec.scale.duration_ms // STEP_MS
    fault_step = (onset - BASE_TS) // STEP_MS
    magnitude = spec.fault.magnitude

    service = "checkout"
    fault_slice = dict(spec.fault.slice) or {"region": "eu", "endpoint": "/buy"}
    metric = "service.errors"

    points: list[TimeseriesPoint] = []
    extra_services = max(0, (spec.scale.n_series - len(_REGIONS) * len(_ENDPOINTS)) // 9)
    services = [service] + [f"svc-{i:02d}" for i in range(extra_services)]
    for svc in services:
        for region in _REGIONS:
            for endpoint in _ENDPOINTS:
                dims = {"service": svc, "region": region, "endpoint": endpoint}
                faulted = (
                    svc == service
                    and all(dims.get(k) == v for k, v in fault_slice.items())
                )
                points.extend(
                    _series_points(
                        rng, metric, dims, n_steps, mean=10.0, sd=1.0,
                        fault_from_step=fault_step if faulted and magnitude > 1 else None,
                        magnitude=magnitude,
                    )
                )
    ts_store.ingest_points(points)

    events = _decoy_events(rng, spec.scale.n_events, spec.scale.duration_ms)
    culprit_id = spec.fault.culprit_event_id or "ev-culprit"
    culprit_ts = onset - int(rng.integers(30_000, FIVE_MIN_MS))
    region = fault_slice.get("region", "eu")
    events.append(
        ChangeEvent(
            event_id=culprit_id,
            kind=EventKind.CONFIG_CHANGE,
            ts=culprit_ts,
            title=f"Config rollout for {service} routing in {region}",
            text=f"service.errors {service} {region} traffic shift oncall-{service}",
            attributes={"service": service, "region": region, "owner": f"team-{service}"},
        )
    )
    ev_store.ingest_events(events)

    alert_id = "alert-service-errors-1"
    fired_at = onset + 2 * STEP_MS
    alert = Alert(
        alert_id=alert_id,
        metric=metric,
        filters={"service": service},
        threshold=11.5,
        direction=Direction.ABOVE,
        window_ms=FIVE_MIN_MS,
        fired_at=fired_at,
        context_hints={"service": service, "region": region, "oncall": f"oncall-{service}"},
    )
    alert_store.ingest_alert(alert)

    truth = GroundTruth(
        culprit_event_id=culprit_id,
        anomalous_slice=fault_slice,
        onset_ts=onset,
        target_metric=metric,
        target_service=service,
        alert_id=alert_id,
        magnitude=magnitude,
    )
    rules = [
        {
            "rule_id": "rule-service-errors",
            "metric": metric,
            "filters": {"service": service},
            "threshold": 11.5,
            "direction": "ABOVE",
            "window_ms": FIVE_MIN_MS,
            "analyzer_binding": {
                "analyzer_id": "service_errors",
                "template": {
                    "service": "filter:service",
                    "metric": "metric",
                    "alert_id": "alert_id",
                    "fired_at": "fired_at",
                },
                "postprocessor_ids": ["annotate_alert"],
            },
        }
    ]
    return ScenarioBundle(spec, ts_store, ev_store, alert_store, truth, rules)


def _gen_container_failures(spec: ScenarioSpec) -> ScenarioBundle:
    rng = np.random.default_rng(spec.seed)
    ts_store, ev_store, alert_store = _stores()
    onset = spec.resolved_onset()
    n_steps = spec.scale.duration_ms // STEP_MS
    fault_step = (onset - BASE_TS) // STEP_MS
    magnitude = spec.fault.magnitude

    fault_slice = dict(spec.fault.slice) or {"pool": "shared-2"}
    fault_pool = fault_slice.get("pool", "shared-2")
    metric = "containers.failures"

    points: list[TimeseriesPoint] = []
    for pool in _POOLS:
        for job in _JOBS:
            for region in _REGIONS[:2]:
                dims = {"pool": pool, "job": job, "region": region}
                faulted = all(dims.get(k) == v for k, v in fault_slice.items())
                points.extend(
                    _series_points(
                        rng, metric, dims, n_steps, mean=6.0, sd=0.8,
                        fault_from_step=fault_step if faulted and magnitude > 1 else None,
                        magnitude=magnitude,
                    )
                )
    # the faulted pool's owning service shows correlated errors for chaining
    owner_service = f"svc-{fault_pool}"
    for svc in [owner_service, "svc-shared-1"]:
        for region in _REGIONS[:2]:
            for endpoint in ["/rpc", "/health"]:
                dims = {"service": svc, "region": region, "endpoint": endpoint}
                faulted = svc == owner_service and region == "eu" and endpoint == "/rpc"
                points.extend(
                    _series_points(
                        rng, "service.errors", dims, n_steps, mean=10.0, sd=1.0,
                        fault_from_step=fault_step if faulted and magnitude > 1 else None,
                        magnitude=magnitude,
                    )
                )
    ts_store.ingest_points(points)

    events = _decoy_events(rng, spec.scale.n_events, spec.scale.duration_ms)
    culprit_id = spec.fault.culprit_event_id or "ev-culprit"
    culprit_ts = onset - int(rng.integers(30_000, FIVE_MIN_MS))
    events.append(
        ChangeEvent(
            event_id=culprit_id,
            kind=EventKind.DEPLOY,
            ts=culprit_ts,
            title=f"Deploy agent update to pool {fault_pool}",
            text=f"containers.failures {fault_pool} kernel cgroup limits oncall-compute",
            attributes={"service": fault_pool, "owner": "team-compute", "region": "eu"},
        )
    )
    ev_store.ingest_events(events)

    alert_id = "alert-container-failures-1"
    alert = Alert(
        alert_id=alert_id,
        metric=metric,
        filters={},
        threshold=8.0,
        direction=Direction.ABOVE,
        window_ms=FIVE_MIN_MS,
        fired_at=onset + 2 * STEP_MS,
        context_hints={"service": fault_pool, "region": "eu", "oncall": "oncall-compute"},
    )
    alert_store.ingest_alert(alert)

    truth = GroundTruth(
        culprit_event_id=culprit_id,
        anomalous_slice=fault_slice,
        onset_ts=onset,
        target_metric=metric,
        target_service=fault_pool,
        alert_id=alert_id,
        magnitude=magnitude,
    )
    rules = [
        {
            "rule_id": "rule-container-failures",
            "metric": metric,
            "filters": {},
            "threshold": 8.0,
            "direction": "ABOVE",
            "window_ms": FIVE_MIN_MS,
            "analyzer_binding": {
                "analyzer_id": "container_failures",
                "template": {
                    "metric": "metric",
                    "alert_id": "alert_id",
                    "fired_at": "fired_at",
                },
                "postprocessor_ids": ["annotate_alert"],
            },
        }
    ]
    return ScenarioBundle(spec, ts_store, ev_store, alert_store, truth, rules)


def _gen_ml_features(spec: ScenarioSpec) -> ScenarioBundle:
    rng = np.random.default_rng(spec.seed)
    ts_store, ev_store, alert_store = _stores()
    onset = spec.resolved_onset()
    n_steps = spec.scale.duration_ms // STEP_MS
    fault_step = (onset - BASE_TS) // STEP_MS
    magnitude = spec.fault.magnitude

    model = "ranker-v8"
    fault_slice = dict(spec.fault.slice) or {"feature": "geo_signals"}
    fault_feature = fault_slice.get("feature", "geo_signals")
    dataset_of = {"geo_signals": "geo_ingest", "click_hist": "click_ingest",
                  "price_feats": "price_ingest", "user_embed": "click_ingest"}
    fault_dataset = dataset_of.get(fault_feature, _DATASETS[0])
    metric = "model.prediction_score"

    points: list[TimeseriesPoint] = []
    for m in [model, "ranker-v7"]:
        faulted = m == model
        points.extend(
            _series_points(
                rng, metric, {"model": m}, n_steps, mean=0.82, sd=0.01,
                fault_from_step=fault_step if faulted and magnitude > 1 else None,
                magnitude=magnitude, down=True,
            )
        )
    for feature in _FEATURES:
        faulted = feature == fault_feature
        points.extend(
            _series_points(
                rng, "feature.coverage", {"feature": feature, "model": model}, n_steps,
                mean=0.95, sd=0.01,
                fault_from_step=fault_step if faulted and magnitude > 1 else None,
                magnitude=magnitude, down=True,
            )
        )
    for dataset in _DATASETS:
        faulted = dataset == fault_dataset
        points.extend(
            _series_points(
                rng, "upstream.rows", {"dataset": dataset}, n_steps, mean=5000.0, sd=50.0,
                fault_from_step=fault_step if faulted and magnitude > 1 else None,
                magnitude=magnitude, down=True,
            )
        )
    for endpoint in ["/infer", "/health"]:
        points.extend(
            _series_points(
                rng, "service.errors",
                {"service": "inference", "region": "eu", "endpoint": endpoint},
                n_steps, mean=10.0, sd=1.0, fault_from_step=None, magnitude=1.0,
            )
        )
    ts_store.ingest_points(points)

    events = _decoy_events(rng, spec.scale.n_events, spec.scale.duration_ms)
    culprit_id = spec.fault.culprit_event_id or "ev-culprit"
    culprit_ts = onset - int(rng.integers(30_000, FIVE_MIN_MS))
    events.append(
        ChangeEvent(
            event_id=culprit_id,
            kind=EventKind.CODE_CHANGE,
            ts=culprit_ts,
            title=f"Pipeline schema change for {fault_dataset}",
            text=f"upstream {fault_dataset} {fault_feature} parser {model} oncall-ml",
            attributes={"service": fault_dataset, "owner": "team-data", "region": "eu"},
        )
    )
    ev_store.ingest_events(events)

    alert_id = "alert-ml-features-1"
    alert = Alert(
        alert_id=alert_id,
        metric=metric,
        filters={"model": model},
        threshold=0.6,
        direction=Direction.BELOW,
        window_ms=FIVE_MIN_MS,
        fired_at=onset + 2 * STEP_MS,
        context_hints={"service": fault_dataset, "region": "eu", "oncall": "oncall-ml"},
    )
    alert_store.ingest_alert(alert)

    truth = GroundTruth(
        culprit_event_id=culprit_id,
        anomalous_slice=fault_slice,
        onset_ts=onset,
        target_metric=metric,
        target_service=model,
        alert_id=alert_id,
        magnitude=magnitude,
    )
    rules = [
        {
            "rule_id": "rule-ml-features",
            "metric": metric,
            "filters": {"model": model},
            "threshold": 0.6,
            "direction": "BELOW",
            "window_ms": FIVE_MIN_MS,
            "analyzer_binding": {
                "analyzer_id": "ml_features",
                "template": {
                    "model": "filter:model",
                    "metric": "metric",
                    "alert_id": "alert_id",
                    "fired_at": "fired_at",
                },
                "postprocessor_ids": ["annotate_alert"],
            },
        }
    ]
    return ScenarioBundle(spec, ts_store, ev_store, alert_store, truth, rules)


def write_scenario_dir(bundle: ScenarioBundle, out_dir: Path | str) -> Path:
    """Persist a generated scenario as a self-contained directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = bundle.spec
    replicated = ScenarioBundle(
        spec=spec,
        timeseries=TimeseriesStore(out / "points.jsonl"),
        events=EventStore(out / "events.jsonl"),
        alerts=AlertStore(out / "alerts.jsonl"),
        ground_truth=bundle.ground_truth,
        alert_rules=bundle.alert_rules,
    )
    for metric in bundle.timeseries.metrics():
        replicated.timeseries.ingest_points(
            TimeseriesPoint(metric, dims, ts, value)
            for ts, dims, value in bundle.timeseries.raw_rows(metric)
        )
    from .queries import EventQuery, TimeRange

    everything = EventQuery(range=TimeRange(0, 4_000_000_000_000))
    replicated.events.ingest_events(bundle.events.query_events(everything))
    for alert in bundle.alerts.list_alerts():
        replicated.alerts.ingest_alert(alert)
    (out / "rules.json").write_text(json.dumps(bundle.alert_rules, indent=2) + "\n")
    (out / "ground_truth.json").write_text(
        json.dumps(bundle.ground_truth.to_obj(), indent=2) + "\n"
    )
    (out / "spec.json").write_text(
        json.dumps(
            {
                "scenario_id": spec.scenario_id.value,
                "seed": spec.seed,
                "scale": {
                    "n_series": spec.scale.n_series,
                    "n_events": spec.scale.n_events,
                    "duration_ms": spec.scale.duration_ms,
                },
                "fault": {
                    "slice": dict(spec.fault.slice),
                    "onset_ts": spec.fault.onset_ts,
                    "magnitude": spec.fault.magnitude,
                    "culprit_event_id": spec.fault.culprit_event_id,
                },
            },
            indent=2,
        )
        + "\n"
    )
    return out


def load_scenario_dir(path: Path | str) -> ScenarioBundle:
    """Open the stores of a previously written scenario directory."""
    root = Path(path)
    spec_obj = json.loads((root / "spec.json").read_text())
    truth_obj = json.loads((root / "ground_truth.json").read_text())
    spec = ScenarioSpec(
        scenario_id=ScenarioId(spec_obj["scenario_id"]),
        seed=spec_obj["seed"],
        scale=Scale(**spec_obj["scale"]),
        fault=FaultSpec(**spec_obj["fault"]),
    )
    truth = GroundTruth(**truth_obj)
    return ScenarioBundle(
        spec=spec,
        timeseries=TimeseriesStore(root / "points.jsonl"),
        events=EventStore(root / "events.jsonl"),
        alerts=AlertStore(root / "alerts.jsonl"),
        ground_truth=truth,
        alert_rules=json.loads((root / "rules.json").read_text()),
    )
