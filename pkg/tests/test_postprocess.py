from drp.backend import DrpService
from drp.config import BackendConfig, DrpConfig, PostprocessConfig
from drp.core import (
    CauseCategory,
    FindingSection,
    Findings,
    FindingStatus,
    RequestStatus,
    SectionPayload,
    Widget,
)
from drp.postprocess import aggregate_insights, classify_slo_cause
from drp.telemetry import TimeRange
from drp.testing import EchoAnalyzer, FailingPostProcessor


def make_service(tmp_path, max_retries=3):
    config = DrpConfig(
        home=tmp_path / "home",
        backend=BackendConfig(poll_interval_ms=5),
        postprocess=PostprocessConfig(max_retries=max_retries),
    )
    service = DrpService(config)
    service.register_analyzer(EchoAnalyzer(), "drp.testing:EchoAnalyzer")
    return service


def run_request(service, postprocessors, inputs=None):
    service.start(worker_count=1)
    try:
        request_id = service.submit_diagnose("echo", inputs or {}, postprocessors)
        assert service.wait_terminal(request_id, 5000)
        # drain the pp queue deterministically
        import time

        deadline = time.time() + 5
        while service.postprocess.queue.depth() > 0 and time.time() < deadline:
            time.sleep(0.01)
        assert service.postprocess.queue.depth() == 0
        return request_id
    finally:
        service.close()


class TestRetryPolicy:
    def test_stateless_retried_to_success(self, tmp_path):
        service = make_service(tmp_path)
        pp = FailingPostProcessor("flaky_pp", stateful=False, succeed_on=3)
        service.register_postprocessor(pp)
        run_request(service, ["flaky_pp"])
        assert pp.calls == 3
        outcome = service.postprocess.outcomes_log.records()[-1]
        assert outcome["status"] == "SUCCESS"
        assert outcome["attempts"] == 3

    def test_stateful_never_retried(self, tmp_path):
        service = make_service(tmp_path)
        pp = FailingPostProcessor("stateful_pp", stateful=True, succeed_on=2)
        service.register_postprocessor(pp)
        run_request(service, ["stateful_pp"])
        assert pp.calls == 1
        outcome = service.postprocess.outcomes_log.records()[-1]
        assert outcome["status"] == "FAILED"
        assert outcome["attempts"] == 1

    def test_stateless_exhausts_retries(self, tmp_path):
        service = make_service(tmp_path, max_retries=3)
        pp = FailingPostProcessor("never_pp", stateful=False, succeed_on=99)
        service.register_postprocessor(pp)
        run_request(service, ["never_pp"])
        assert pp.calls == 3
        outcome = service.postprocess.outcomes_log.records()[-1]
        assert outcome["status"] == "FAILED"


class TestAnnotateAlert:
    def _fire_alert(self, service):
        from drp.core import Alert, Direction

        alert = Alert(
            alert_id="al-1",
            metric="m",
            filters={},
            threshold=1.0,
            direction=Direction.ABOVE,
            window_ms=60_000,
            fired_at=123,
        )
        service.alerts.ingest_alert(alert)
        return alert

    def test_annotation_applied_once(self, tmp_path):
        service = make_service(tmp_path)
        self._fire_alert(service)
        request_id = run_request(service, ["annotate_alert"], inputs={"alert_id": "al-1"})
        alert = service.alerts.get("al-1")
        assert len(alert.annotations) == 1
        annotation = alert.annotations[0]
        assert annotation.author == "drp"
        assert request_id in annotation.link

    def test_duplicate_source_deduplicated(self, tmp_path):
        service = make_service(tmp_path)
        self._fire_alert(service)
        request_id = run_request(service, ["annotate_alert"], inputs={"alert_id": "al-1"})
        # re-enqueue the same source request manually
        service.postprocess.enqueue(request_id, ("annotate_alert",))
        service.postprocess.drain()
        assert len(service.alerts.get("al-1").annotations) == 1

    def test_unknown_alert_fails_processor(self, tmp_path):
        service = make_service(tmp_path)
        run_request(service, ["annotate_alert"], inputs={"alert_id": "ghost"})
        outcome = service.postprocess.outcomes_log.records()[-1]
        assert outcome["status"] == "FAILED"


def _kv_findings(cause: str) -> Findings:
    return Findings(
        FindingStatus.ISSUE_FOUND,
        "s",
        (
            FindingSection(
                "causes", "", Widget.KEY_VALUE,
                SectionPayload("drp.kv/1", {"cause": cause}),
            ),
        ),
    )


def _ranked_findings(kind: str) -> Findings:
    return Findings(
        FindingStatus.ISSUE_FOUND,
        "s",
        (
            FindingSection(
                "suspects", "", Widget.RANKED_LIST,
                SectionPayload(
                    "drp.ranked/1",
                    {"items": [{"label": "ev", "score": 0.9, "kind": kind}]},
                ),
            ),
        ),
    )


class TestClassifySloCause:
    def test_explicit_cause_key(self):
        assert classify_slo_cause(_kv_findings("NETWORK")) is CauseCategory.NETWORK

    def test_ranked_event_kind(self):
        assert classify_slo_cause(_ranked_findings("CONFIG_CHANGE")) is CauseCategory.CONFIG_CHANGE
        assert classify_slo_cause(_ranked_findings("CODE_CHANGE")) is CauseCategory.CODE_CHANGE

    def test_fallback_unknown(self):
        assert classify_slo_cause(Findings(FindingStatus.OK, "s")) is CauseCategory.UNKNOWN

    def test_explicit_beats_ranked(self):
        findings = Findings(
            FindingStatus.ISSUE_FOUND, "s",
            _kv_findings("SERVER").sections + _ranked_findings("CONFIG_CHANGE").sections,
        )
        assert classify_slo_cause(findings) is CauseCategory.SERVER


class TestInsights:
    def _record(self, finished_at, findings):
        from drp.backend import ResultRecord
        from drp.core import Context

        return ResultRecord(
            record_key=f"r{finished_at}",
            request_id=f"r{finished_at}",
            analyzer_id="a",
            analyzer_version="1",
            context=Context(),
            status=RequestStatus.SUCCESS,
            findings=findings,
            error=None,
            enqueued_at=finished_at - 10,
            started_at=finished_at - 5,
            finished_at=finished_at,
            analyzer_runtime_ms=1,
            attempt_count=1,
        )

    def test_empty_window(self):
        report = aggregate_insights([], TimeRange(0, 1000))
        assert report.ranked == ()

    def test_counts_and_shares(self):
        records = [self._record(i, _kv_findings("NETWORK")) for i in range(3)]
        records.append(self._record(50, _kv_findings("SERVER")))
        report = aggregate_insights(records, TimeRange(0, 1000))
        assert report.ranked[0][0] is CauseCategory.NETWORK
        assert report.ranked[0][1] == 3
        assert abs(report.ranked[0][2] - 0.75) < 1e-9
        assert report.ranked[1] == (CauseCategory.SERVER, 1, 0.25)

    def test_share_sums_to_one_and_counts_conserved(self):
        import random

        rng = random.Random(5)
        causes = [rng.choice(["NETWORK", "SERVER", "CLIENT", "CAPACITY"]) for _ in range(40)]
        records = [self._record(i, _kv_findings(c)) for i, c in enumerate(causes)]
        report = aggregate_insights(records, TimeRange(0, 1000))
        assert sum(n for _, n, _ in report.ranked) == len(causes)
        assert abs(sum(share for _, _, share in report.ranked) - 1.0) <= 1e-9

    def test_daily_buckets(self):
        day = 24 * 60 * 60 * 1000
        records = [
            self._record(100, _kv_findings("NETWORK")),
            self._record(day + 100, _kv_findings("SERVER")),
        ]
        report = aggregate_insights(records, TimeRange(0, 2 * day))
        assert len(report.daily) == 2
        assert report.daily[0][1][0][0] is CauseCategory.NETWORK
        assert report.daily[1][1][0][0] is CauseCategory.SERVER
