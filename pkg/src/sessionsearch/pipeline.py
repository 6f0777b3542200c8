"""End-to-end scoring: initial retrieval, method dispatch, session replay.

Every method starts from the same top-depth query-likelihood candidate list
for the current query and differs only in how it rescores those candidates.
Scoring is pure per session, and sessions are processed in input order, so
repeated runs are byte-identical.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Optional

from .baselines import qa_score, rm3_model
from .index import InvertedIndex
from .lm import RankedList, TermDistribution, query_mle, rank_documents, top_k_by_query_likelihood
from .session import Session, pseudo_info_need
from .srm import (
    SrmParams,
    SrmTrace,
    VARIANT_QUERY_CHANGE,
    VARIANT_RM1,
    build_session_model,
    rerank,
)

logger = logging.getLogger(__name__)

METHOD_NONE = "none"
METHOD_SRM_QC = "srm-qc"
METHOD_SRM_RM1 = "srm-rm1"
METHOD_RM3_QN = "rm3-qn"
METHOD_RM3_QPRIME = "rm3-qprime"
METHOD_QA_UNIFORM = "qa-uniform"
METHOD_QA_DECAY = "qa-decay"

METHODS = (
    METHOD_NONE,
    METHOD_SRM_QC,
    METHOD_SRM_RM1,
    METHOD_RM3_QN,
    METHOD_RM3_QPRIME,
    METHOD_QA_UNIFORM,
    METHOD_QA_DECAY,
)


@dataclass
class RunConfig:
    """Effective parameters of one run; defaults match the reference setup."""

    method: str = METHOD_NONE
    lam: float = 0.5
    gamma: float = 0.5
    m: int = 10
    mu: float = 2500.0
    clip_terms: int = 100
    decay: float = 0.92
    depth: int = 2000
    k: int = 10

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r} (expected one of {METHODS})")
        if self.depth <= 0 or self.k <= 0:
            raise ValueError("depth and k must be positive")

    def srm_params(self) -> SrmParams:
        variant = VARIANT_QUERY_CHANGE if self.method == METHOD_SRM_QC else VARIANT_RM1
        return SrmParams(
            gamma=self.gamma,
            lam=self.lam,
            m=self.m,
            mu=self.mu,
            clip_terms=self.clip_terms,
            variant=variant,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class SessionResult:
    session_id: str
    topic_id: str
    ranking: RankedList
    model: Optional[TermDistribution] = None
    trace: Optional[SrmTrace] = None


def score_session(
    session: Session, index: InvertedIndex, config: RunConfig
) -> RankedList:
    """Rank the top-depth candidates for a session's current query."""
    return score_session_full(session, index, config).ranking


def score_session_full(
    session: Session, index: InvertedIndex, config: RunConfig
) -> SessionResult:
    """Like score_session but keeps the learned model and trace when present."""
    q_n = session.current_query
    if not q_n.tokens:
        raise ValueError(
            f"session {session.session_id!r}: current query has no analyzable terms"
        )
    candidates = top_k_by_query_likelihood(q_n, index, config.mu, config.depth)
    method = config.method
    result = SessionResult(session.session_id, session.topic_id, candidates)

    if method == METHOD_NONE or not candidates:
        return result

    if method in (METHOD_SRM_QC, METHOD_SRM_RM1):
        model, trace = build_session_model(session, config.srm_params(), index)
        result.model = model
        result.trace = trace
        result.ranking = rerank(candidates, model, index, config.mu)
        return result

    if method in (METHOD_RM3_QN, METHOD_RM3_QPRIME):
        if method == METHOD_RM3_QN:
            feedback_query = q_n
        else:
            feedback_query = pseudo_info_need(
                [step.query for step in session.history] + [q_n]
            )
        feedback = top_k_by_query_likelihood(feedback_query, index, config.mu, config.m)
        if feedback:
            model = rm3_model(
                feedback_query,
                [doc_id for doc_id, _ in feedback],
                index,
                config.mu,
                config.lam,
                config.clip_terms,
            )
        else:
            # Nothing retrievable to expand with; score with the bare query.
            model = query_mle(feedback_query)
        result.model = model
        result.ranking = rerank(candidates, model, index, config.mu)
        return result

    # qa_score covers the whole query pool, current query included, so it
    # replaces the candidate score rather than adding to it.
    decay = None if method == METHOD_QA_UNIFORM else config.decay
    rescored = [
        (doc_id, qa_score(session, index.doc(doc_id), index, config.mu, decay))
        for doc_id, _ in candidates
    ]
    result.ranking = rank_documents(rescored)
    return result


def run_sessions(
    sessions: list[Session], index: InvertedIndex, config: RunConfig
) -> tuple[list[SessionResult], list[str]]:
    """Score every session, in order; returns results plus skipped ids.

    Sessions whose current query analyzes to nothing cannot be served and are
    skipped with a warning.
    """
    results = []
    skipped = []
    for session in sessions:
        if not session.current_query.tokens:
            logger.warning(
                "skipping session %s: current query %r has no terms after analysis",
                session.session_id,
                session.current_raw,
            )
            skipped.append(session.session_id)
            continue
        results.append(score_session_full(session, index, config))
    return results, skipped
