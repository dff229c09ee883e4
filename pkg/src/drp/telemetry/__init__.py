"""Pluggable telemetry stores, pre-aggregation, and scenario generation."""

from .queries import Agg, EventQuery, RollupConfig, TimeRange, TimeseriesQuery, nearest_rank_percentile
from .rollup import RollupHandle, RollupUnanswerable, preaggregate
from .scenario import (
    BASE_TS,
    STEP_MS,
    FaultSpec,
    GroundTruth,
    Scale,
    ScenarioBundle,
    ScenarioId,
    ScenarioSpec,
    generate_scenario,
    load_scenario_dir,
    write_scenario_dir,
)
from .stores import AlertStore, EventStore, TimeseriesStore, UnknownAlert, UnknownMetric

__all__ = [
    "Agg",
    "AlertStore",
    "BASE_TS",
    "EventQuery",
    "EventStore",
    "FaultSpec",
    "GroundTruth",
    "RollupConfig",
    "RollupHandle",
    "RollupUnanswerable",
    "Scale",
    "ScenarioBundle",
    "ScenarioId",
    "ScenarioSpec",
    "STEP_MS",
    "TimeRange",
    "TimeseriesQuery",
    "TimeseriesStore",
    "UnknownAlert",
    "UnknownMetric",
    "generate_scenario",
    "load_scenario_dir",
    "nearest_rank_percentile",
    "preaggregate",
    "write_scenario_dir",
]
