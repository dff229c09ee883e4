"""Seeded random generators shared by module and acceptance tests."""

from __future__ import annotations

import random
import string

from drp.core import (
    Confidence,
    Context,
    ContextValue,
    DiagnoseRequest,
    FindingSection,
    Findings,
    FindingStatus,
    RequestStatus,
    SectionPayload,
    ValueTag,
    Widget,
)

_WORDS = ["svc", "region", "errors", "eu", "us", "deploy", "buy", "p99", "pool"]


def _word(rng: random.Random) -> str:
    return rng.choice(_WORDS) + "".join(rng.choices(string.ascii_lowercase, k=3))


def random_context_value(rng: random.Random) -> ContextValue:
    tag = rng.choice(list(ValueTag))
    if tag is ValueTag.STRING:
        return ContextValue.string(_word(rng))
    if tag is ValueTag.INT:
        return ContextValue.of_int(rng.randint(-10**12, 10**12))
    if tag is ValueTag.FLOAT:
        return ContextValue.of_float(rng.uniform(-1e9, 1e9))
    if tag is ValueTag.BOOL:
        return ContextValue.of_bool(rng.random() < 0.5)
    if tag is ValueTag.TIMESTAMP:
        return ContextValue.timestamp(rng.randint(0, 2_000_000_000_000))
    return ContextValue.string_list([_word(rng) for _ in range(rng.randint(0, 4))])


def random_context(rng: random.Random) -> Context:
    n = rng.randint(0, 6)
    entries = {}
    while len(entries) < n:
        entries[_word(rng)] = random_context_value(rng)
    return Context(entries)


def _random_section(rng: random.Random) -> FindingSection:
    widget = rng.choice(list(Widget))
    if widget is Widget.TEXT:
        payload = SectionPayload("text/1", " ".join(_word(rng) for _ in range(5)))
    elif widget is Widget.KEY_VALUE:
        payload = SectionPayload(
            "kv/1", {_word(rng): _word(rng) for _ in range(rng.randint(1, 4))}
        )
    elif widget is Widget.TABLE:
        cols = [_word(rng) for _ in range(rng.randint(1, 4))]
        rows = [[rng.randint(0, 99) for _ in cols] for _ in range(rng.randint(0, 5))]
        payload = SectionPayload("table/1", {"columns": cols, "rows": rows})
    elif widget is Widget.RANKED_LIST:
        scores = sorted((round(rng.random(), 6) for _ in range(rng.randint(1, 5))), reverse=True)
        payload = SectionPayload(
            "ranked/1", {"items": [{"label": _word(rng), "score": s} for s in scores]}
        )
    else:
        start = rng.randint(0, 10**12)
        points = [[start + i * 60_000, round(rng.uniform(0, 100), 6)] for i in range(rng.randint(0, 10))]
        payload = SectionPayload("series/1", {"points": points})
    return FindingSection(
        title=_word(rng),
        body=" ".join(_word(rng) for _ in range(rng.randint(0, 8))),
        widget=widget,
        payload=payload,
        child_refs=tuple(_word(rng) for _ in range(rng.randint(0, 2))),
    )


def random_findings(rng: random.Random) -> Findings:
    status = rng.choice(list(FindingStatus))
    summary = " ".join(_word(rng) for _ in range(rng.randint(1, 10)))
    return Findings(
        status=status,
        summary=summary,
        sections=tuple(_random_section(rng) for _ in range(rng.randint(0, 4))),
        confidence=rng.choice(list(Confidence) + [None]),
    )


def random_request(rng: random.Random) -> DiagnoseRequest:
    status = rng.choice(list(RequestStatus))
    return DiagnoseRequest(
        request_id=f"req-{rng.randint(0, 10**9)}",
        analyzer_id=_word(rng),
        context=random_context(rng),
        enqueued_at=rng.randint(0, 2_000_000_000_000),
        status=status,
        attempt=rng.randint(0, 3),
        lease_expiry=rng.randint(0, 2_000_000_000_000) if status is RequestStatus.RUNNING else None,
        postprocessor_ids=tuple(_word(rng) for _ in range(rng.randint(0, 2))),
    )


def drilldown_instance(seed: int):
    """Random small drill-down instance with one planted dominant slice."""
    from drp.telemetry import TimeRange

    rng = random.Random(seed)
    n_dims = rng.randint(2, 4)
    dims = [f"d{i}" for i in range(n_dims)]
    values = {d: [f"v{j}" for j in range(rng.randint(2, 5))] for d in dims}
    depth = rng.randint(1, min(3, n_dims))
    target_dims = rng.sample(dims, depth)
    target = {d: rng.choice(values[d]) for d in target_dims}
    rows = []
    for t in range(40):
        for _ in range(rng.randint(3, 6)):
            combo = {d: rng.choice(values[d]) for d in dims}
            rows.append((combo, t, rng.uniform(1, 2)))
    for t in range(40, 80):
        for _ in range(rng.randint(3, 6)):
            combo = {d: rng.choice(values[d]) for d in dims}
            value = rng.uniform(1, 2)
            if all(combo.get(k) == v for k, v in target.items()):
                value += rng.uniform(8, 12)
            rows.append((combo, t, value))
    return rows, TimeRange(0, 40), TimeRange(40, 80), target
