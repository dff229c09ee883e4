"""Change-event culprit ranking against a fired alert.

Each event gets a score in [0, 1] from three signals: time proximity to
the alert (exponential decay, with a hard cutoff shortly after firing),
text similarity between the event and the alert's metric/hints (TF-IDF
cosine), and overlap of structural attributes (service, region, owner).
The annotation spells out every nonzero component so the ranking stays
explainable.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from ..core.errors import DrpError
from ..core.types import Alert, ChangeEvent, Confidence, Context, ValueTag

TAU_MS = 30 * 60 * 1000  # time-decay constant
FUTURE_GRACE_MS = 5 * 60 * 1000  # events later than this after firing score T=0
CONTEXT_KEYS = ("service", "region", "owner")
HIGH_CUT = 0.7
MEDIUM_CUT = 0.4

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EmptyInput(DrpError):
    """No events were given to rank."""


@dataclass(frozen=True)
class RankedEvent:
    event: ChangeEvent
    score: float
    confidence: Confidence
    annotation: str


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def tfidf_cosine(doc_tokens: Sequence[str], query_tokens: Sequence[str],
                 corpus: Sequence[Sequence[str]]) -> float:
    """Cosine similarity of smoothed TF-IDF vectors.

    idf = ln((1 + N) / (1 + df)) + 1 over the given corpus, so tokens shared
    by every document still contribute and two identical documents always
    score exactly 1.0.
    """
    if not doc_tokens or not query_tokens:
        return 0.0
    n_docs = len(corpus)
    df: Counter = Counter()
    for doc in corpus:
        df.update(set(doc))

    def vector(tokens: Sequence[str]) -> dict[str, float]:
        tf = Counter(tokens)
        return {
            term: count * (math.log((1 + n_docs) / (1 + df[term])) + 1)
            for term, count in tf.items()
        }

    a = vector(doc_tokens)
    b = vector(query_tokens)
    dot = sum(weight * b[term] for term, weight in a.items() if term in b)
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    if norm_a == 0 or norm_b == 0:
        return 0.0
    return dot / (norm_a * norm_b)


def _hint_map(alert: Alert, context: Optional[Context]) -> dict[str, str]:
    hints = dict(alert.context_hints)
    if context is not None:
        for key in CONTEXT_KEYS:
            if key not in hints:
                value = context.get(key)
                if value is not None and value.tag is ValueTag.STRING:
                    hints[key] = value.value
    return hints


def rank_events(
    events: Sequence[ChangeEvent],
    alert: Alert,
    context: Optional[Context] = None,
    weights: tuple[float, float, float] = (0.4, 0.4, 0.2),
    tau_ms: int = TAU_MS,
    high_cut: float = HIGH_CUT,
    medium_cut: float = MEDIUM_CUT,
) -> list[RankedEvent]:
    """Rank change events by likelihood of having caused the alert.

    score = w_time * T + w_text * X + w_ctx * C where T decays with the
    gap between event time and alert firing (zero for events more than
    five minutes after firing), X is TF-IDF cosine between the event's
    title+text and the alert's metric plus hint values, and C is the
    fraction of matching hint attributes. Ordering is invariant to the
    input order of events.
    """
    if not events:
        raise EmptyInput("rank_events needs at least one event")
    w_time, w_text, w_ctx = weights
    if abs(w_time + w_text + w_ctx - 1.0) > 1e-9:
        raise DrpError(f"weights must sum to 1, got {weights}")

    hints = _hint_map(alert, context)
    query_tokens = tokenize(alert.metric + " " + " ".join(hints[k] for k in sorted(hints)))
    event_tokens = {e.event_id: tokenize(e.title + " " + e.text) for e in events}
    corpus = [event_tokens[e.event_id] for e in sorted(events, key=lambda e: e.event_id)]
    corpus.append(query_tokens)

    considered_keys = [k for k in CONTEXT_KEYS if k in hints]

    ranked = []
    for event in events:
        if event.ts > alert.fired_at + FUTURE_GRACE_MS:
            t_score = 0.0
        else:
            t_score = math.exp(-abs(alert.fired_at - event.ts) / tau_ms)
        x_score = tfidf_cosine(event_tokens[event.event_id], query_tokens, corpus)
        if considered_keys:
            matches = sum(
                1 for k in considered_keys if event.attributes.get(k) == hints[k]
            )
            c_score = matches / len(considered_keys)
        else:
            c_score = 0.0
        score = w_time * t_score + w_text * x_score + w_ctx * c_score
        if score >= high_cut:
            confidence = Confidence.HIGH
        elif score >= medium_cut:
            confidence = Confidence.MEDIUM
        else:
            confidence = Confidence.LOW
        parts = []
        if t_score > 0:
            parts.append(f"time={t_score:.4f}")
        if x_score > 0:
            parts.append(f"text={x_score:.4f}")
        if c_score > 0:
            parts.append(f"context={c_score:.4f}")
        annotation = "; ".join(parts) if parts else "no signal"
        ranked.append(RankedEvent(event, score, confidence, annotation))
    ranked.sort(key=lambda r: (-r.score, r.event.ts, r.event.event_id))
    return ranked
