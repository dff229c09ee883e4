import threading
import time

import pytest

from drp.backend import (
    CyclicDag,
    DagNode,
    DagPolicy,
    DrpService,
    ErrorClass,
    NodeStatus,
    QueueFull,
    QueueStore,
    SyncTimeout,
    UnknownRequest,
    WorkerCrash,
)
from drp.config import BackendConfig, DrpConfig
from drp.core import Context, ContextValue, FindingStatus, RequestStatus, TransitionError
from drp.sdk import UnknownAnalyzer
from drp.testing import (
    EchoAnalyzer,
    FlakyAnalyzer,
    SleeperAnalyzer,
    SubprocessEchoAnalyzer,
    SubprocessSleeperAnalyzer,
)


def make_service(tmp_path, fault_hook=None, echo_timeout_ms=10_000, **backend_overrides) -> DrpService:
    from dataclasses import replace

    backend = replace(BackendConfig(poll_interval_ms=5), **backend_overrides)
    config = DrpConfig(home=tmp_path / "home", backend=backend)
    service = DrpService(config, fault_hook=fault_hook)
    service.register_analyzer(EchoAnalyzer(echo_timeout_ms), "drp.testing:EchoAnalyzer")
    service.register_analyzer(SleeperAnalyzer(), "drp.testing:SleeperAnalyzer")
    service.register_analyzer(FlakyAnalyzer(), "drp.testing:FlakyAnalyzer")
    service.register_analyzer(SubprocessEchoAnalyzer(), "drp.testing:SubprocessEchoAnalyzer")
    service.register_analyzer(
        SubprocessSleeperAnalyzer(), "drp.testing:SubprocessSleeperAnalyzer"
    )
    return service


@pytest.fixture
def service(tmp_path):
    svc = make_service(tmp_path)
    svc.start(worker_count=4)
    yield svc
    svc.close()


class TestQueueStore:
    def test_submit_initial_state(self, tmp_path):
        q = QueueStore(tmp_path / "q.jsonl")
        entry = q.submit("r1", "echo", Context())
        assert entry.status is RequestStatus.QUEUED
        assert entry.attempt == 0

    def test_empty_dequeue(self):
        assert QueueStore().dequeue_reserve("w", 1000) is None

    def test_queue_full(self):
        q = QueueStore(max_depth=2)
        q.submit("r1", "a", Context())
        q.submit("r2", "a", Context())
        with pytest.raises(QueueFull):
            q.submit("r3", "a", Context())

    def test_two_workers_race_single_entry(self):
        for _ in range(1000):
            q = QueueStore()
            q.submit("r1", "a", Context())
            grants = []
            barrier = threading.Barrier(2)

            def worker(wid):
                barrier.wait()
                got = q.dequeue_reserve(wid, 10_000)
                if got is not None:
                    grants.append(wid)

            threads = [threading.Thread(target=worker, args=(f"w{i}",)) for i in range(2)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            assert len(grants) == 1

    def test_lease_expiry_requeues_with_same_attempt(self):
        fake_now = [1000]
        q = QueueStore(clock=lambda: fake_now[0])
        q.submit("r1", "a", Context())
        got = q.dequeue_reserve("w1", lease_ms=500)
        assert got is not None and got.status is RequestStatus.RUNNING
        fake_now[0] = 1600  # past the lease
        assert q.status_of("r1") is RequestStatus.QUEUED
        again = q.dequeue_reserve("w2", lease_ms=500)
        assert again is not None
        assert again.attempt == 0

    def test_complete_requires_live_lease(self):
        fake_now = [1000]
        q = QueueStore(clock=lambda: fake_now[0])
        q.submit("r1", "a", Context())
        q.dequeue_reserve("w1", lease_ms=500)
        fake_now[0] = 2000
        assert q.complete("r1", "w1", RequestStatus.SUCCESS) is False

    def test_terminal_requires_terminal_status(self):
        q = QueueStore()
        q.submit("r1", "a", Context())
        q.dequeue_reserve("w1", 1000)
        with pytest.raises(TransitionError):
            q.complete("r1", "w1", RequestStatus.RUNNING)

    def test_wal_replay(self, tmp_path):
        path = tmp_path / "q.jsonl"
        q = QueueStore(path)
        q.submit("r1", "a", Context({"k": ContextValue.of_int(5)}))
        q.submit("r2", "a", Context())
        got = q.dequeue_reserve("w1", 60_000)
        q.complete(got.request_id, "w1", RequestStatus.SUCCESS)
        q.close()
        reopened = QueueStore(path)
        assert reopened.status_of("r1") is RequestStatus.SUCCESS
        assert reopened.status_of("r2") is RequestStatus.QUEUED
        entry = reopened.dequeue_reserve("w2", 60_000)
        assert entry.request_id == "r2"


class TestSubmitAndPeek:
    def test_submit_then_success(self, service):
        request_id = service.submit_diagnose("echo", {"service": "adsvc"})
        assert service.wait_terminal(request_id, 5000)
        peek = service.peek_diagnose_status(request_id)
        assert peek.status is RequestStatus.SUCCESS
        assert peek.findings.status is FindingStatus.OK

    def test_unknown_analyzer(self, service):
        with pytest.raises(UnknownAnalyzer):
            service.submit_diagnose("ghost", {})

    def test_unknown_request(self, service):
        with pytest.raises(UnknownRequest):
            service.peek_diagnose_status("req-nope")

    def test_peek_matches_stored_record(self, service):
        request_id = service.submit_diagnose("echo", {})
        service.wait_terminal(request_id, 5000)
        peek = service.peek_diagnose_status(request_id)
        record = service.results.latest_for_request(request_id)
        assert peek.findings == record.findings

    def test_sync_fast(self, service):
        peek = service.diagnose_sync("echo", {}, timeout_ms=5000)
        assert peek.status is RequestStatus.SUCCESS

    def test_sync_timeout_then_poll(self, service):
        with pytest.raises(SyncTimeout) as err:
            service.diagnose_sync("sleeper", {"sleep_ms": "700"}, timeout_ms=100)
        request_id = err.value.request_id
        assert service.wait_terminal(request_id, 5000)
        assert service.peek_diagnose_status(request_id).status is RequestStatus.SUCCESS


class TestRetries:
    def test_flaky_succeeds_on_third_attempt(self, service):
        request_id = service.submit_diagnose("flaky", {"succeed_on_attempt": "3"})
        assert service.wait_terminal(request_id, 10_000)
        record = service.results.latest_for_request(request_id)
        assert record.status is RequestStatus.SUCCESS
        assert record.attempt_count == 3

    def test_exhausted_attempts_fail(self, service):
        request_id = service.submit_diagnose("flaky", {"succeed_on_attempt": "10"})
        assert service.wait_terminal(request_id, 10_000)
        record = service.results.latest_for_request(request_id)
        assert record.status is RequestStatus.FAILED
        assert record.error.error_class is ErrorClass.ANALYZER_EXCEPTION
        assert record.error.attempt_count == 3


class TestTimeouts:
    def test_inprocess_timeout(self, tmp_path):
        service = make_service(tmp_path)
        # descriptor timeout is 1000 ms; sleep for 2x
        service.start(worker_count=1)
        try:
            started = time.time()
            request_id = service.submit_diagnose("sleeper", {"sleep_ms": "2000"})
            assert service.wait_terminal(request_id, 8000)
            elapsed = time.time() - started
            record = service.results.latest_for_request(request_id)
            assert record.status is RequestStatus.FAILED
            assert record.error.error_class is ErrorClass.TIMEOUT
            # 3 attempts x 1 s timeout + scheduling slack
            assert elapsed < 3 * 1.0 + 1.0 + 2.0
        finally:
            service.close()

    def test_subprocess_timeout_kills_child(self, tmp_path):
        service = make_service(tmp_path, max_attempts=1)
        service.start(worker_count=1)
        try:
            import psutil

            me = psutil.Process()
            started = time.time()
            request_id = service.submit_diagnose("sleeper_sub", {"sleep_ms": "2000"})
            assert service.wait_terminal(request_id, 8000)
            elapsed = time.time() - started
            record = service.results.latest_for_request(request_id)
            assert record.status is RequestStatus.FAILED
            assert record.error.error_class is ErrorClass.TIMEOUT
            assert elapsed < 1.0 + 1.0  # timeout + 1 s grace
            time.sleep(0.2)
            survivors = [
                c for c in me.children(recursive=True)
                if "subproc" in " ".join(c.cmdline())
            ]
            assert survivors == []
        finally:
            service.close()


class TestSubprocessPath:
    def test_subprocess_echo(self, service):
        request_id = service.submit_diagnose("echo_sub", {"service": "x"})
        assert service.wait_terminal(request_id, 15_000)
        peek = service.peek_diagnose_status(request_id)
        assert peek.status is RequestStatus.SUCCESS
        assert peek.findings.status is FindingStatus.OK
        record = service.results.latest_for_request(request_id)
        # trace came back over the wire (may be empty; key exists)
        assert record.data_access_reads >= 0


class TestCrashRecovery:
    def test_crash_after_result_write_before_complete(self, tmp_path):
        crashed = threading.Event()

        def fault_hook(point, entry):
            if point == "post_result_write" and not crashed.is_set():
                crashed.set()
                raise WorkerCrash()

        service = make_service(tmp_path, fault_hook=fault_hook, echo_timeout_ms=400,
                               default_timeout_ms=500, lease_factor=1.0)
        service.start(worker_count=2)
        try:
            request_id = service.submit_diagnose("echo", {})
            assert service.wait_terminal(request_id, 10_000)
            records = service.results.records_for_request(request_id)
            assert len(records) == 1
            assert records[0].status is RequestStatus.SUCCESS
            assert crashed.is_set()
        finally:
            service.close()


class TestDag:
    def test_diamond_runs_and_overlaps(self, service):
        nodes = [
            DagNode("A", "echo"),
            DagNode("B", "sleeper", {"sleep_ms": "300"}, depends_on=("A",)),
            DagNode("C", "sleeper", {"sleep_ms": "300"}, depends_on=("A",)),
            DagNode("D", "echo", depends_on=("B", "C")),
        ]
        started = time.time()
        outcomes = service.run_dag(nodes, DagPolicy.FAIL_FAST)
        elapsed = time.time() - started
        assert all(o.status is NodeStatus.SUCCESS for o in outcomes.values())
        # B and C overlapped: the whole DAG finished well under their serial time
        assert elapsed < 1.1

    def test_fail_fast_cancels_descendants(self, service):
        nodes = [
            DagNode("A", "echo"),
            DagNode("B", "flaky", {"succeed_on_attempt": "99"}, depends_on=("A",)),
            DagNode("C", "echo", depends_on=("A",)),
            DagNode("D", "echo", depends_on=("B", "C")),
        ]
        outcomes = service.run_dag(nodes, DagPolicy.FAIL_FAST)
        assert outcomes["B"].status is NodeStatus.FAILED
        assert outcomes["C"].status is NodeStatus.SUCCESS
        assert outcomes["D"].status is NodeStatus.CANCELLED

    def test_continue_policy_runs_reachable(self, service):
        nodes = [
            DagNode("A", "flaky", {"succeed_on_attempt": "99"}),
            DagNode("B", "echo", depends_on=("A",)),
        ]
        outcomes = service.run_dag(nodes, DagPolicy.CONTINUE)
        assert outcomes["A"].status is NodeStatus.FAILED
        assert outcomes["B"].status is NodeStatus.SUCCESS

    def test_self_edge_cycle(self, service):
        with pytest.raises(CyclicDag):
            service.run_dag([DagNode("A", "echo", depends_on=("A",))])


class TestHistory:
    def test_history_ordering_and_since(self, service):
        ids = [service.submit_diagnose("echo", {"n": str(i)}) for i in range(5)]
        for request_id in ids:
            assert service.wait_terminal(request_id, 5000)
        full = service.query_history("echo")
        assert len(full) == 5
        finish_times = [r.finished_at for r in full]
        assert finish_times == sorted(finish_times)
        cutoff = full[2].finished_at + 1
        later = service.query_history("echo", since_ts=cutoff)
        assert all(r.finished_at >= cutoff for r in later)

    def test_record_context_snapshot(self, service):
        request_id = service.submit_diagnose("echo", {"service": "adsvc"})
        service.wait_terminal(request_id, 5000)
        record = service.results.latest_for_request(request_id)
        assert record.context.value_of("service") == "adsvc"


class TestPreload:
    def test_empty_history_no_preload(self, tmp_path):
        service = make_service(tmp_path)
        service.start(worker_count=1)
        try:
            assert service.preloaded_groups == set()
        finally:
            service.close()

    def test_dominant_analyzer_group_preloaded(self, tmp_path):
        service = make_service(tmp_path)
        service.start(worker_count=2)
        # build history: echo dominates (>= 85% of traffic)
        ids = [service.submit_diagnose("echo", {}) for _ in range(17)]
        ids += [service.submit_diagnose("sleeper", {"sleep_ms": "1"}) for _ in range(3)]
        for request_id in ids:
            assert service.wait_terminal(request_id, 10_000)
        service.close()

        restarted = make_service(tmp_path)
        restarted.start(worker_count=1)
        try:
            assert "testing" in restarted.preloaded_groups
            fetches_before = dict(restarted.bundles.fetch_counts)
            request_id = restarted.submit_diagnose("echo", {})
            assert restarted.wait_terminal(request_id, 5000)
            assert restarted.bundles.fetch_counts == fetches_before  # no fetch on first run
        finally:
            restarted.close()


class TestOverhead:
    def test_overhead_nonnegative_and_excludes_runtime(self, service):
        request_id = service.submit_diagnose("sleeper", {"sleep_ms": "200"})
        assert service.wait_terminal(request_id, 5000)
        record = service.results.latest_for_request(request_id)
        assert record.overhead_ms >= 0
        assert record.analyzer_runtime_ms >= 180
        total = record.finished_at - record.enqueued_at
        assert record.overhead_ms <= total
