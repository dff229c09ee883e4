import math
import random

import numpy as np
import pytest

from drp.analysis import (
    AnomalyDirection,
    EmptyInput,
    GridMismatch,
    InsufficientData,
    ZeroDelta,
    correlate,
    detect_anomalies,
    dimensional_analysis,
    pearson,
    rank_events,
)
from drp.core import Alert, ChangeEvent, Confidence, Direction, EventKind
from drp.telemetry import ScenarioId, ScenarioSpec, TimeRange, generate_scenario

from .oracles import best_lag_oracle, brute_force_drilldown, pearson_oracle
from .support import drilldown_instance

STEP = 60_000


def _series(values, step=STEP, start=0):
    return [(start + i * step, float(v)) for i, v in enumerate(values)]


class TestDetectAnomalies:
    def test_constant_series(self):
        assert detect_anomalies(_series([5.0] * 100)) == []

    def test_step_detected(self):
        rng = np.random.default_rng(11)
        values = list(rng.normal(0, 0.1, 200)) + list(rng.normal(3.0, 0.1, 50))
        windows = detect_anomalies(_series(values))
        assert len(windows) == 1
        onset_ts = 200 * STEP
        assert abs(windows[0].start_ts - onset_ts) <= 2 * STEP
        assert windows[0].direction is AnomalyDirection.UP

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            detect_anomalies(_series(range(10)), window_n=30)

    def test_non_ascending_rejected(self):
        from drp.core import InvariantViolation

        series = _series([1.0] * 80)
        series[5] = (series[4][0], 1.0)
        with pytest.raises(InvariantViolation):
            detect_anomalies(series)

    def test_affine_invariance(self):
        rng = np.random.default_rng(5)
        base_values = list(rng.normal(10, 1, 150)) + list(rng.normal(30, 1, 30))
        base = detect_anomalies(_series(base_values))
        assert base, "expected at least one window on the stepped series"
        transform_rng = random.Random(99)
        for _ in range(100):
            a = transform_rng.uniform(0.01, 100.0)
            b = transform_rng.uniform(-1000.0, 1000.0)
            transformed = detect_anomalies(_series([a * v + b for v in base_values]))
            assert [(w.start_ts, w.end_ts, w.direction) for w in transformed] == [
                (w.start_ts, w.end_ts, w.direction) for w in base
            ]

    def test_down_direction(self):
        rng = np.random.default_rng(8)
        values = list(rng.normal(50, 0.5, 100)) + list(rng.normal(10, 0.5, 30))
        windows = detect_anomalies(_series(values))
        assert windows and windows[0].direction is AnomalyDirection.DOWN


class TestCorrelate:
    def test_self_correlation(self):
        rng = np.random.default_rng(1)
        target = _series(rng.normal(0, 1, 60))
        out = correlate(target, {"self": target}, max_lag_ms=5 * STEP)
        assert out[0].candidate_key == "self"
        assert out[0].best_lag_ms == 0
        assert abs(out[0].r - 1.0) <= 1e-12

    def test_planted_lag_recovered(self):
        rng = np.random.default_rng(2)
        base = rng.normal(0, 1, 80)
        target = _series(base)
        shifted = [(ts + 3 * STEP, v + rng.normal(0, 0.1)) for ts, v in target]
        out = correlate(target, {"lagged": shifted}, max_lag_ms=5 * STEP)
        assert out[0].best_lag_ms == 3 * STEP
        assert out[0].r >= 0.9

    def test_constant_candidate_omitted(self):
        target = _series(np.random.default_rng(3).normal(0, 1, 50))
        flat = _series([7.0] * 50)
        assert correlate(target, {"flat": flat}, max_lag_ms=2 * STEP) == []

    def test_grid_mismatch(self):
        target = _series([1, 2, 3, 4] * 10, step=STEP)
        other = _series([1, 2, 3, 4] * 10, step=STEP * 2)
        with pytest.raises(GridMismatch):
            correlate(target, {"other": other}, max_lag_ms=STEP)

    def test_pearson_matches_oracle(self):
        rng = random.Random(4)
        for _ in range(100):
            n = rng.randint(5, 60)
            xs = [rng.uniform(-10, 10) for _ in range(n)]
            ys = [rng.uniform(-10, 10) for _ in range(n)]
            if len(set(xs)) < 2 or len(set(ys)) < 2:
                continue
            assert abs(pearson(xs, ys) - pearson_oracle(xs, ys)) <= 1e-9

    def test_best_lag_matches_full_scan_oracle(self):
        rng = np.random.default_rng(6)
        target = _series(rng.normal(0, 1, 70))
        for key_seed in range(20):
            crng = np.random.default_rng(100 + key_seed)
            cand = _series(crng.normal(0, 1, 70))
            out = correlate(target, {"c": cand}, max_lag_ms=4 * STEP, min_overlap=20)
            expected = best_lag_oracle(target, cand, STEP, 4 * STEP, 20)
            if expected is None:
                assert out == []
            else:
                assert out[0].best_lag_ms == expected[0]
                assert abs(out[0].r - expected[1]) <= 1e-9


class TestDimensionalAnalysis:
    def _scenario_rows(self, seed=0):
        bundle = generate_scenario(ScenarioSpec(ScenarioId.SERVICE_ERRORS, seed=seed))
        truth = bundle.ground_truth
        rows = [
            (dims, ts, v)
            for ts, dims, v in bundle.timeseries.raw_rows("service.errors")
            if dims.get("service") == truth.target_service
        ]
        rows = [({k: v for k, v in dims.items() if k != "service"}, ts, val)
                for dims, ts, val in rows]
        return bundle, rows

    def test_scenario_slice_identified(self):
        bundle, rows = self._scenario_rows(seed=13)
        truth = bundle.ground_truth
        onset = truth.onset_ts
        baseline = TimeRange(onset - 40 * STEP, onset)
        anomalous = TimeRange(onset, onset + 30 * STEP)
        results = dimensional_analysis(rows, baseline, anomalous)
        assert results[0].slice == truth.anomalous_slice
        assert results[0].explain_share >= 0.9

    def test_uniform_delta_no_dominant_slice(self):
        rows = []
        values = ["a", "b", "c", "d"]
        for v in values:
            for t in range(20):
                rows.append(({"dim": v}, t, 1.0))
            for t in range(20, 40):
                rows.append(({"dim": v}, t, 2.0))
        results = dimensional_analysis(rows, TimeRange(0, 20), TimeRange(20, 40), max_depth=1, top_k=4)
        for r in results:
            assert abs(r.explain_share - 0.25) <= 1e-9

    def test_zero_delta(self):
        rows = [({"d": "x"}, 1, 5.0), ({"d": "x"}, 11, 5.0)]
        with pytest.raises(ZeroDelta):
            dimensional_analysis(rows, TimeRange(0, 10), TimeRange(10, 20))

    def test_partition_shares_sum_to_one(self):
        rng = random.Random(21)
        rows = []
        for v in ["a", "b", "c"]:
            for t in range(30):
                rows.append(({"dim": v, "other": rng.choice(["x", "y"])}, t, rng.uniform(1, 3)))
            for t in range(30, 60):
                rows.append(({"dim": v, "other": rng.choice(["x", "y"])}, t, rng.uniform(2, 6)))
        results = dimensional_analysis(
            rows, TimeRange(0, 30), TimeRange(30, 60), max_depth=1, top_k=10, beam_width=100
        )
        shares = [r.explain_share for r in results if list(r.slice) == ["dim"]]
        assert len(shares) == 3
        assert abs(sum(shares) - 1.0) <= 1e-6

    def test_greedy_matches_brute_force(self):
        # compact version of the acceptance sweep: seeded instances, <=4 dims x <=5 values
        matches = 0
        for seed in range(20):
            rows, baseline, anomalous, _ = drilldown_instance(seed)
            greedy = dimensional_analysis(rows, baseline, anomalous, max_depth=3, top_k=3)
            exhaustive = brute_force_drilldown(rows, baseline, anomalous, max_depth=3, top_k=3)
            if greedy[0].slice == exhaustive[0]:
                matches += 1
        assert matches == 20




def _alert(fired_at=10_000_000, hints=None, metric="service.errors"):
    return Alert(
        alert_id="a1",
        metric=metric,
        filters={},
        threshold=1.0,
        direction=Direction.ABOVE,
        window_ms=300_000,
        fired_at=fired_at,
        context_hints=hints or {},
    )


class TestRankEvents:
    def test_maximal_event(self):
        alert = _alert(hints={"service": "checkout"})
        event = ChangeEvent(
            "e1", EventKind.CONFIG_CHANGE, alert.fired_at,
            title="service errors checkout", text="",
            attributes={"service": "checkout"},
        )
        [ranked] = rank_events([event], alert)
        assert abs(ranked.score - 1.0) <= 1e-9
        assert ranked.confidence is Confidence.HIGH

    def test_unrelated_event(self):
        alert = _alert(hints={"service": "checkout"})
        event = ChangeEvent(
            "e1", EventKind.OTHER, alert.fired_at - 36_000_000,
            title="rotate certs", text="infra", attributes={"service": "other"},
        )
        [ranked] = rank_events([event], alert)
        assert ranked.score < 1e-6
        assert ranked.confidence is Confidence.LOW

    def test_future_event_cutoff(self):
        alert = _alert(hints={})
        past = ChangeEvent("p", EventKind.DEPLOY, alert.fired_at - 1000, "x y z")
        future = ChangeEvent("f", EventKind.DEPLOY, alert.fired_at + 6 * 60_000, "x y z")
        ranked = {r.event.event_id: r for r in rank_events([past, future], alert)}
        assert ranked["f"].score < ranked["p"].score

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            rank_events([], _alert())

    def test_order_invariant_to_input_order(self):
        rng = random.Random(17)
        alert = _alert(hints={"service": "checkout", "region": "eu"})
        events = [
            ChangeEvent(
                f"e{i}", EventKind.CONFIG_CHANGE,
                alert.fired_at - rng.randint(0, 7_200_000),
                title=" ".join(rng.sample(["service", "errors", "checkout", "cache", "deploy"], 3)),
                attributes={"service": rng.choice(["checkout", "other"])},
            )
            for i in range(30)
        ]
        a = [r.event.event_id for r in rank_events(list(events), alert)]
        shuffled = list(events)
        rng.shuffle(shuffled)
        b = [r.event.event_id for r in rank_events(shuffled, alert)]
        assert a == b

    def test_scores_in_unit_interval(self):
        rng = random.Random(23)
        alert = _alert(hints={"service": "checkout"})
        events = [
            ChangeEvent(
                f"e{i}", EventKind.OTHER,
                alert.fired_at + rng.randint(-10_000_000, 1_000_000),
                title=" ".join(rng.sample(["a", "b", "errors", "checkout"], 2)),
                attributes={"service": rng.choice(["checkout", "x"])},
            )
            for i in range(50)
        ]
        for r in rank_events(events, alert):
            assert 0.0 <= r.score <= 1.0

    def test_hand_computed_case_decayed_half_context(self):
        # T = exp(-1) at 30 min; X = 0 (no token overlap); C = 1/2
        alert = _alert(hints={"service": "checkout", "region": "eu"}, metric="err.rate")
        event = ChangeEvent(
            "e1", EventKind.DEPLOY, alert.fired_at - 30 * 60_000,
            title="unrelated words entirely", text="",
            attributes={"service": "checkout", "region": "us"},
        )
        [ranked] = rank_events([event], alert)
        expected = 0.4 * math.exp(-1.0) + 0.4 * 0.0 + 0.2 * 0.5
        assert abs(ranked.score - expected) <= 1e-9

    def test_culprit_beats_decoys_on_scenario(self):
        hits = 0
        for seed in range(10):
            bundle = generate_scenario(ScenarioSpec(ScenarioId.SERVICE_ERRORS, seed=seed))
            truth = bundle.ground_truth
            alert = bundle.alerts.get(truth.alert_id)
            from drp.telemetry import EventQuery

            events = bundle.events.query_events(
                EventQuery(range=TimeRange(alert.fired_at - 7_200_000, alert.fired_at + 600_000))
            )
            ranked = rank_events(events, alert)
            if ranked[0].event.event_id == truth.culprit_event_id:
                hits += 1
        assert hits >= 9
