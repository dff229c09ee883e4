import importlib.util
import sys

import pytest

from drp.core import (
    AnalyzerDescriptor,
    Context,
    ContextValue,
    FindingStatus,
    InputSchema,
    InvariantViolation,
    SchemaParam,
    ValueTag,
)
from drp.sdk import (
    Analyzer,
    AnalyzerRegistry,
    ChildFailed,
    CycleDetected,
    DuplicateId,
    FindingsBuilder,
    InvalidName,
    LiveDataSource,
    ScaffoldExists,
    Toolkit,
    UnknownAnalyzer,
    bootstrap_template,
)
from drp.telemetry import AlertStore, EventStore, TimeseriesStore, TimeRange, TimeseriesQuery
from drp.core import TimeseriesPoint


class StubAnalyzer(Analyzer):
    def __init__(self, analyzer_id, version="1.0.0", behavior=None):
        self._id = analyzer_id
        self._version = version
        self._behavior = behavior

    def describe(self):
        return AnalyzerDescriptor(
            analyzer_id=self._id, version=self._version, group_id="stub",
            allowlisted=True, timeout_ms=5000,
        )

    def analyze(self, ctx, toolkit):
        if self._behavior:
            return self._behavior(ctx, toolkit)
        return toolkit.findings(FindingStatus.OK).set_summary(f"{self._id} ran").build()


def _toolkit(registry, ctx=None, stores=None):
    ts, ev, al = stores or (TimeseriesStore(), EventStore(), AlertStore())
    return Toolkit(
        context=ctx or Context(),
        source=LiveDataSource(ts, ev, al),
        resolver=registry.resolve,
        request_id="req-test",
    )


class TestRegistry:
    def test_register_and_lookup(self):
        reg = AnalyzerRegistry()
        reg.register(StubAnalyzer("a"))
        assert reg.resolve("a").describe().analyzer_id == "a"

    def test_duplicate_rejected(self):
        reg = AnalyzerRegistry()
        reg.register(StubAnalyzer("a", "1.0.0"))
        with pytest.raises(DuplicateId):
            reg.register(StubAnalyzer("a", "1.0.0"))

    def test_two_versions_latest_default(self):
        reg = AnalyzerRegistry()
        reg.register(StubAnalyzer("a", "1.0.0"))
        reg.register(StubAnalyzer("a", "1.10.0"))
        reg.register(StubAnalyzer("a", "1.2.0"))
        assert reg.resolve("a").describe().version == "1.10.0"
        assert reg.resolve("a", "1.0.0").describe().version == "1.0.0"

    def test_unknown(self):
        with pytest.raises(UnknownAnalyzer):
            AnalyzerRegistry().resolve("ghost")


class TestChaining:
    def test_override_scoping(self):
        reg = AnalyzerRegistry()
        seen = {}

        def child_behavior(ctx, toolkit):
            seen["svc"] = ctx.value_of("svc")
            return toolkit.findings(FindingStatus.OK).set_summary("child").build()

        reg.register(StubAnalyzer("child", behavior=child_behavior))
        parent_ctx = Context({"svc": ContextValue.string("a")})
        toolkit = _toolkit(reg, parent_ctx)
        before = parent_ctx.content_hash()
        toolkit.chain("child", {"svc": ContextValue.string("b")})
        assert seen["svc"] == "b"
        assert parent_ctx.content_hash() == before
        assert toolkit.context.value_of("svc") == "a"

    def test_cycle_detected(self):
        reg = AnalyzerRegistry()
        reg.register(StubAnalyzer("A", behavior=lambda c, t: t.chain("B", {})))
        reg.register(StubAnalyzer("B", behavior=lambda c, t: t.chain("A", {})))
        toolkit = Toolkit(
            context=Context(),
            source=LiveDataSource(TimeseriesStore(), EventStore(), AlertStore()),
            resolver=reg.resolve,
            call_stack=("A",),
        )
        with pytest.raises(CycleDetected) as err:
            toolkit.chain("B", {})
        assert err.value.path == ["A", "B", "A"]

    def test_child_failure_catchable(self):
        reg = AnalyzerRegistry()

        def boom(ctx, toolkit):
            raise ValueError("bad math")

        reg.register(StubAnalyzer("broken", behavior=boom))

        def parent_behavior(ctx, toolkit):
            try:
                toolkit.chain("broken", {})
            except ChildFailed:
                return toolkit.findings(FindingStatus.INCONCLUSIVE).set_summary(
                    "dependency unavailable"
                ).build()

        reg.register(StubAnalyzer("parent", behavior=parent_behavior))
        toolkit = _toolkit(reg)
        findings = reg.resolve("parent").analyze(Context(), toolkit)
        assert findings.status is FindingStatus.INCONCLUSIVE

    def test_unknown_child(self):
        reg = AnalyzerRegistry()
        toolkit = _toolkit(reg)
        with pytest.raises(UnknownAnalyzer):
            toolkit.chain("ghost", {})

    def test_compositionality(self):
        # chain(child, overrides) equals running the child directly on ctx + overrides
        store = TimeseriesStore()
        store.ingest_points([TimeseriesPoint("m", {"r": "eu"}, 60_000 * i, float(i)) for i in range(5)])
        stores = (store, EventStore(), AlertStore())
        reg = AnalyzerRegistry()

        def child_behavior(ctx, toolkit):
            q = TimeseriesQuery("m", TimeRange(0, 600_000), agg="SUM")
            result = toolkit.query_timeseries(q)
            total = sum(v for _, v in result[()])
            return (
                toolkit.findings(FindingStatus.OK)
                .set_summary(f"total={total} svc={ctx.value_of('svc')}")
                .build()
            )

        reg.register(StubAnalyzer("child", behavior=child_behavior))
        parent_ctx = Context({"svc": ContextValue.string("a")})
        overrides = {"svc": ContextValue.string("b")}

        via_chain = _toolkit(reg, parent_ctx, stores).chain("child", overrides)
        direct_ctx = parent_ctx.with_entries(overrides)
        direct = reg.resolve("child").analyze(direct_ctx, _toolkit(reg, direct_ctx, stores))
        assert via_chain == direct

    def test_chain_records_and_refs(self):
        reg = AnalyzerRegistry()
        reg.register(StubAnalyzer("leaf"))

        def parent_behavior(ctx, toolkit):
            toolkit.chain("leaf", {})
            toolkit.chain("leaf", {})
            return toolkit.findings(FindingStatus.OK).set_summary("p").build()

        reg.register(StubAnalyzer("parent", behavior=parent_behavior))
        toolkit = _toolkit(reg)
        reg.resolve("parent").analyze(Context(), toolkit)
        refs = [r["ref"] for r in toolkit.chain_records]
        assert refs == ["req-test.c1", "req-test.c2"]


class TestTraceCompleteness:
    def test_every_read_recorded(self):
        store = TimeseriesStore()
        store.ingest_points([TimeseriesPoint("m", {}, 0, 1.0)])
        ev = EventStore()
        toolkit = Toolkit(
            context=Context(),
            source=LiveDataSource(store, ev, AlertStore()),
            resolver=lambda _id: None,
        )
        toolkit.query_timeseries(TimeseriesQuery("m", TimeRange(0, 10)))
        from drp.telemetry import EventQuery

        toolkit.query_events(EventQuery(range=TimeRange(0, 10)))
        toolkit.fetch_rows("m", TimeRange(0, 10))
        assert toolkit.trace.reads == 3
        kinds = [e["kind"] for e in toolkit.trace.entries]
        assert kinds == ["ts_query", "ev_query", "rows"]


class TestBuilder:
    def test_minimal(self):
        f = FindingsBuilder(FindingStatus.OK).set_summary("healthy").build()
        assert f.status is FindingStatus.OK
        assert f.summary == "healthy"

    def test_ragged_table_rejected(self):
        builder = FindingsBuilder(FindingStatus.OK)
        with pytest.raises(InvariantViolation):
            builder.add_table("t", ["a", "b"], [[1]])

    def test_section_order_preserved(self):
        builder = FindingsBuilder(FindingStatus.OK)
        for i in range(5):
            builder.add_text(f"s{i}", f"body {i}")
        f = builder.build()
        assert [s.title for s in f.sections] == [f"s{i}" for i in range(5)]

    def test_build_only_once(self):
        builder = FindingsBuilder(FindingStatus.OK)
        builder.build()
        with pytest.raises(InvariantViolation):
            builder.build()


class TestScaffold:
    SCHEMA = InputSchema((
        SchemaParam("service", ValueTag.STRING, required=True),
        SchemaParam("window_m", ValueTag.INT, default=ContextValue.of_int(60)),
        SchemaParam("deep", ValueTag.BOOL, default=ContextValue.of_bool(False)),
    ))

    def _load(self, path):
        spec = importlib.util.spec_from_file_location(path.stem, path)
        module = importlib.util.module_from_spec(spec)
        sys.modules[path.stem] = module
        spec.loader.exec_module(module)
        return module

    def test_scaffold_runs_and_is_inconclusive(self, tmp_path):
        files = bootstrap_template("disk_full", self.SCHEMA, tmp_path)
        assert all(f.exists() for f in files)
        module = self._load(files[0])
        analyzer = module.ANALYZER
        desc = analyzer.describe()
        assert desc.analyzer_id == "disk_full"
        assert len(desc.input_schema.params) == 3
        from drp.core import validate_context

        ctx = validate_context(desc.input_schema, {"service": "x"})
        toolkit = Toolkit(
            context=ctx,
            source=LiveDataSource(TimeseriesStore(), EventStore(), AlertStore()),
            resolver=lambda _id: analyzer,
        )
        assert analyzer.analyze(ctx, toolkit).status is FindingStatus.INCONCLUSIVE

    def test_refuses_overwrite(self, tmp_path):
        bootstrap_template("disk_full", self.SCHEMA, tmp_path)
        with pytest.raises(ScaffoldExists):
            bootstrap_template("disk_full", self.SCHEMA, tmp_path)

    def test_invalid_name(self, tmp_path):
        with pytest.raises(InvalidName):
            bootstrap_template("not-a-name", self.SCHEMA, tmp_path)
        with pytest.raises(InvalidName):
            bootstrap_template("class", self.SCHEMA, tmp_path)
