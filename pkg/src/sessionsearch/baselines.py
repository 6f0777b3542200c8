"""Reference methods the session model is compared against.

RM1/RM3 are classic relevance models over pseudo-feedback documents; the
query-aggregation scorers fold session history into the ranking score
directly, either as one concatenated query or as a recency-decayed sum.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .analysis import AnalyzedText
from .index import DocumentRecord, InvertedIndex
from .lm import (
    TermDistribution,
    clip_distribution,
    interpolate,
    known_terms_only,
    mix_doc_models,
    query_likelihood_doc_weights,
    query_log_likelihood,
    query_mle,
)
from .session import Session, pseudo_info_need


def rm1_model(
    query: AnalyzedText,
    feedback_doc_ids: Sequence[str],
    index: InvertedIndex,
    mu: float,
) -> TermDistribution:
    """Relevance model: doc MLE models weighted by normalized query likelihood."""
    if not feedback_doc_ids:
        raise ValueError("RM1 requires at least one feedback document")
    weights = query_likelihood_doc_weights(query, feedback_doc_ids, index, mu)
    return mix_doc_models(weights, index)


def rm3_model(
    query: AnalyzedText,
    feedback_doc_ids: Sequence[str],
    index: InvertedIndex,
    mu: float,
    lam: float,
    clip_terms: int = 100,
) -> TermDistribution:
    """Query MLE interpolated with RM1, clipped for scoring.

    lam is the feedback weight: 0 gives the bare query model, 1 pure RM1.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    expanded = interpolate(
        1.0 - lam, query_mle(query), lam, rm1_model(query, feedback_doc_ids, index, mu)
    )
    return clip_distribution(expanded, clip_terms)


def qa_score(
    session: Session,
    doc: DocumentRecord,
    index: InvertedIndex,
    mu: float,
    decay: Optional[float] = None,
) -> float:
    """Query-aggregation score of one document for a session.

    decay=None scores the concatenation of all session queries as one long
    query (uniform aggregation). With a decay in (0, 1], per-query log
    likelihoods are summed with weight decay^(n-t), so older queries count
    less; decay=1 weighs all queries equally. Tokens unseen in the collection
    are dropped, the same convention the first-pass ranker uses.
    """
    queries = [step.query for step in session.history] + [session.current_query]
    if decay is None:
        info_need = known_terms_only(pseudo_info_need(queries), index.stats)
        return query_log_likelihood(info_need, doc, index.stats, mu)
    if not 0.0 < decay <= 1.0:
        raise ValueError(f"decay must be in (0, 1], got {decay}")
    n = len(queries)
    score = 0.0
    for t, query in enumerate(queries, start=1):
        scorable = known_terms_only(query, index.stats)
        if not scorable.tokens:
            continue
        score += decay ** (n - t) * query_log_likelihood(scorable, doc, index.stats, mu)
    return score
