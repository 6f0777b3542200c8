"""Recorded search sessions: steps, query changes, and feedback selection.

A session is a sequence of history steps (query, shown results, clicks)
followed by the current query that is to be served. Dwell times are parsed
and stored but take no part in any computation.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

from .analysis import AnalyzedText, analyze
from .index import InvertedIndex
from .lm import query_log_likelihood


class ChangeType(str, enum.Enum):
    RETAIN = "retain"
    ADD = "add"
    REMOVE = "remove"


class FeedbackSource(str, enum.Enum):
    CLICKS = "clicks"
    PSEUDO = "pseudo"


@dataclass(frozen=True)
class Click:
    doc_id: str
    dwell: Optional[float] = None


@dataclass(frozen=True)
class SessionStep:
    """One recorded interaction: a query, its impressions, and any clicks."""

    query_raw: str
    query: AnalyzedText
    impressions: tuple[str, ...]
    clicks: tuple[Click, ...]

    def __post_init__(self):
        seen = set()
        for doc_id in self.impressions:
            if doc_id in seen:
                raise ValueError(f"duplicate impression {doc_id!r}")
            seen.add(doc_id)
        for click in self.clicks:
            if click.doc_id not in seen:
                raise ValueError(
                    f"clicked doc {click.doc_id!r} does not appear in the impressions"
                )


@dataclass(frozen=True)
class Session:
    session_id: str
    topic_id: str
    history: tuple[SessionStep, ...]
    current_raw: str
    current_query: AnalyzedText

    def queries_up_to(self, t: int) -> list[AnalyzedText]:
        """Queries q_1..q_t, where step len(history)+1 is the current query."""
        n = len(self.history) + 1
        if not 1 <= t <= n:
            raise ValueError(f"step {t} out of range 1..{n}")
        queries = [step.query for step in self.history[: min(t, len(self.history))]]
        if t == n:
            queries.append(self.current_query)
        return queries


@dataclass(frozen=True)
class QueryChange:
    """Term sets retained, added, and removed between consecutive queries."""

    retained: frozenset[str]
    added: frozenset[str]
    removed: frozenset[str]

    def terms_of(self, change_type: ChangeType) -> frozenset[str]:
        if change_type is ChangeType.RETAIN:
            return self.retained
        if change_type is ChangeType.ADD:
            return self.added
        return self.removed


@dataclass(frozen=True)
class FeedbackSet:
    """Documents treated as relevance feedback at one step."""

    doc_ids: tuple[str, ...]
    source: FeedbackSource


def classify_change(
    previous: Optional[AnalyzedText], current: AnalyzedText
) -> QueryChange:
    """Partition unique terms of the current query against the previous one.

    With no previous query every current term counts as added. Multiplicity
    is ignored; the current query must be non-empty.
    """
    if not current.tokens:
        raise ValueError("cannot classify a change into an empty query")
    cur = frozenset(current.tokens)
    prev = frozenset(previous.tokens) if previous is not None else frozenset()
    return QueryChange(
        retained=cur & prev,
        added=cur - prev,
        removed=prev - cur,
    )


def pseudo_info_need(queries: Iterable[AnalyzedText]) -> AnalyzedText:
    """Concatenate observed queries into one token sequence (Q')."""
    queries = list(queries)
    if not queries:
        raise ValueError("pseudo information need requires at least one query")
    tokens: list[str] = []
    for query in queries:
        tokens.extend(query.tokens)
    return AnalyzedText(tuple(tokens))


def _usable(doc_id: str, index: InvertedIndex) -> bool:
    record = index.doc_table.get(doc_id)
    return record is not None and record.length > 0


def select_feedback_docs(
    session: Session, t: int, m: int, mu: float, index: InvertedIndex
) -> FeedbackSet:
    """Pick the feedback documents for step t.

    If any click exists in steps 1..min(t, n-1), the feedback set is the
    ordered union of all clicked docs over those steps. Otherwise it is the
    top-m impressions over those steps ranked by query log likelihood against
    the concatenated queries up to t (pseudo-clicks), ties broken by doc_id.

    Documents missing from the index (or empty after analysis) carry no term
    statistics and are skipped. No impressions at all yields an empty set.
    """
    if m <= 0:
        raise ValueError(f"m must be positive, got {m}")
    n = len(session.history) + 1
    if not 1 <= t <= n:
        raise ValueError(f"step {t} out of range 1..{n}")
    steps = session.history[: min(t, len(session.history))]

    clicked: dict[str, None] = {}
    for step in steps:
        for click in step.clicks:
            if _usable(click.doc_id, index):
                clicked.setdefault(click.doc_id, None)
    if clicked:
        return FeedbackSet(tuple(clicked), FeedbackSource.CLICKS)

    pool: dict[str, None] = {}
    for step in steps:
        for doc_id in step.impressions:
            if _usable(doc_id, index):
                pool.setdefault(doc_id, None)
    if not pool:
        return FeedbackSet((), FeedbackSource.PSEUDO)

    info_need = pseudo_info_need(session.queries_up_to(t))
    scored = [
        (doc_id, query_log_likelihood(info_need, index.doc(doc_id), index.stats, mu))
        for doc_id in pool
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return FeedbackSet(tuple(doc_id for doc_id, _ in scored[:m]), FeedbackSource.PSEUDO)


def load_sessions(
    path: str | Path, analyzer: Callable[[str], AnalyzedText] = analyze
) -> list[Session]:
    """Read sessions from a JSON file.

    Expected shape: {"sessions": [{"session_id", "topic_id", "steps":
    [{"query", "impressions", "clicks": [{"doc", "dwell"?}]}], "current_query"}]}.
    Violations raise ValueError naming the offending session.
    """
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or not isinstance(raw.get("sessions"), list):
        raise ValueError(f"{path}: expected a top-level object with a 'sessions' list")
    sessions = []
    for pos, entry in enumerate(raw["sessions"]):
        label = entry.get("session_id", f"#{pos}") if isinstance(entry, dict) else f"#{pos}"
        try:
            sessions.append(_parse_session(entry, analyzer))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"{path}: session {label}: malformed entry: {exc}") from exc
        except ValueError as exc:
            raise ValueError(f"{path}: session {label}: {exc}") from exc
    return sessions


def _parse_session(entry: dict, analyzer: Callable[[str], AnalyzedText]) -> Session:
    session_id = entry["session_id"]
    topic_id = entry["topic_id"]
    if not isinstance(session_id, str) or not isinstance(topic_id, str):
        raise ValueError("'session_id' and 'topic_id' must be strings")
    steps = []
    for step in entry.get("steps", []):
        clicks = tuple(
            Click(doc_id=c["doc"], dwell=c.get("dwell")) for c in step.get("clicks", [])
        )
        steps.append(
            SessionStep(
                query_raw=step["query"],
                query=analyzer(step["query"]),
                impressions=tuple(step.get("impressions", [])),
                clicks=clicks,
            )
        )
    current_raw = entry["current_query"]
    if not isinstance(current_raw, str):
        raise ValueError("'current_query' must be a string")
    return Session(
        session_id=session_id,
        topic_id=topic_id,
        history=tuple(steps),
        current_raw=current_raw,
        current_query=analyzer(current_raw),
    )
