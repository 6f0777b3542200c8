"""Session relevance model: query-change driven feedback, anchoring, and the
autoregressive session update.

The model walks the session step by step. At each step it builds a feedback
language model from clicked (or pseudo-clicked) documents, anchors it to the
step's own query with a weight tied to that query's similarity to the current
query, and then folds it into the running session model with a self-clarity
mixing weight: feedback that diverges from what the session has already
established contributes more, feedback that merely repeats it contributes
less.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .analysis import AnalyzedText
from .index import InvertedIndex
from .lm import (
    RankedList,
    TermDistribution,
    ZERO,
    clip_distribution,
    cross_entropy_score,
    generalized_jaccard_sim,
    interpolate,
    kl_divergence,
    mix_doc_models,
    query_likelihood_doc_weights,
    query_mle,
    rank_documents,
    smoothed_prob,
)
from .session import (
    ChangeType,
    FeedbackSet,
    QueryChange,
    Session,
    classify_change,
    select_feedback_docs,
)

VARIANT_QUERY_CHANGE = "qc"
VARIANT_RM1 = "rm1"

_UNIFORM_PRIORS = {
    ChangeType.RETAIN: 1.0 / 3.0,
    ChangeType.ADD: 1.0 / 3.0,
    ChangeType.REMOVE: 1.0 / 3.0,
}


def default_change_priors() -> dict[ChangeType, float]:
    """Equal odds for retain/add/remove."""
    return dict(_UNIFORM_PRIORS)


@dataclass
class SrmParams:
    """Knobs for building one session model."""

    gamma: float = 0.5
    lam: float = 0.5
    m: int = 10
    mu: float = 2500.0
    clip_terms: int = 100
    variant: str = VARIANT_QUERY_CHANGE
    change_priors: dict[ChangeType, float] = field(default_factory=default_change_priors)

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.variant not in (VARIANT_QUERY_CHANGE, VARIANT_RM1):
            raise ValueError(f"unknown variant {self.variant!r}")
        total = sum(self.change_priors.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"change priors must sum to 1, got {total}")


@dataclass
class StepTrace:
    """Diagnostics for one step of the session walk."""

    step: int
    query_tokens: tuple[str, ...]
    change: QueryChange
    feedback: FeedbackSet
    lambda_t: float
    gamma_t: float
    kl: float
    top_terms: tuple[tuple[str, float], ...]

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "query_tokens": list(self.query_tokens),
            "change": {
                "retained": sorted(self.change.retained),
                "added": sorted(self.change.added),
                "removed": sorted(self.change.removed),
            },
            "feedback": {
                "doc_ids": list(self.feedback.doc_ids),
                "source": self.feedback.source.value,
            },
            "lambda_t": self.lambda_t,
            "gamma_t": self.gamma_t,
            "kl": "inf" if math.isinf(self.kl) else self.kl,
            "top_terms": [[t, p] for t, p in self.top_terms],
        }


@dataclass
class SrmTrace:
    session_id: str
    records: list[StepTrace] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "records": [record.to_dict() for record in self.records],
        }


def change_likelihood(
    change_terms: frozenset[str],
    change_type: ChangeType,
    doc_id: str,
    index: InvertedIndex,
    mu: float,
) -> float:
    """How well one document explains one query-change term set.

    Retained and added terms: product of smoothed term probabilities.
    Removed terms: one minus the summed unsmoothed probabilities, clamped at
    zero (a document stuffed with dropped terms explains the removal not at
    all). Callers handle empty term sets.
    """
    if not change_terms:
        raise ValueError("change likelihood of an empty term set is undefined")
    doc = index.doc(doc_id)
    if change_type is ChangeType.REMOVE:
        mass = sum(smoothed_prob(term, doc, index.stats, 0.0) for term in sorted(change_terms))
        return max(0.0, 1.0 - mass)
    likelihood = 1.0
    for term in sorted(change_terms):
        likelihood *= smoothed_prob(term, doc, index.stats, mu)
    return likelihood


def doc_change_posterior(
    change_terms: frozenset[str],
    change_type: ChangeType,
    feedback: FeedbackSet,
    index: InvertedIndex,
    mu: float,
) -> dict[str, float]:
    """Distribution over feedback docs given one change-type term set.

    Likelihoods are normalized over the feedback set; if every document has
    zero likelihood the posterior falls back to uniform.
    """
    if not feedback.doc_ids:
        raise ValueError("posterior over an empty feedback set is undefined")
    likelihoods = {
        doc_id: change_likelihood(change_terms, change_type, doc_id, index, mu)
        for doc_id in feedback.doc_ids
    }
    total = math.fsum(likelihoods.values())
    if total <= 0.0:
        uniform = 1.0 / len(feedback.doc_ids)
        return {doc_id: uniform for doc_id in feedback.doc_ids}
    return {doc_id: lik / total for doc_id, lik in likelihoods.items()}


def feedback_model(
    change: QueryChange,
    feedback: FeedbackSet,
    priors: Mapping[ChangeType, float],
    index: InvertedIndex,
    mu: float,
) -> TermDistribution:
    """Query-change driven feedback language model.

    Each feedback document's unsmoothed model is weighted by how well the
    document explains the observed change, averaged over change types.
    Empty change-type sets are dropped and the priors renormalized over the
    rest (proportionally, which is uniform for the default equal priors).
    """
    if not feedback.doc_ids:
        raise ValueError("cannot build a feedback model from an empty feedback set")
    active = [
        (change_type, change.terms_of(change_type))
        for change_type in (ChangeType.RETAIN, ChangeType.ADD, ChangeType.REMOVE)
        if change.terms_of(change_type)
    ]
    if not active:
        raise ValueError("query change has no terms in any change type")
    prior_total = math.fsum(priors.get(change_type, 0.0) for change_type, _ in active)
    if prior_total <= 0.0:
        renormalized = {change_type: 1.0 / len(active) for change_type, _ in active}
    else:
        renormalized = {
            change_type: priors.get(change_type, 0.0) / prior_total
            for change_type, _ in active
        }

    doc_weights = {doc_id: 0.0 for doc_id in feedback.doc_ids}
    for change_type, terms in active:
        posterior = doc_change_posterior(terms, change_type, feedback, index, mu)
        weight = renormalized[change_type]
        for doc_id, p in posterior.items():
            doc_weights[doc_id] += weight * p

    return mix_doc_models(doc_weights, index)


def rm1_style_feedback_model(
    query: AnalyzedText, feedback: FeedbackSet, index: InvertedIndex, mu: float
) -> TermDistribution:
    """Feedback model weighting docs by plain query likelihood p(d|q_t)."""
    if not feedback.doc_ids:
        raise ValueError("cannot build a feedback model from an empty feedback set")
    doc_weights = query_likelihood_doc_weights(query, feedback.doc_ids, index, mu)
    return mix_doc_models(doc_weights, index)


def anchor_feedback(
    fm: TermDistribution,
    q_t: AnalyzedText,
    q_n: AnalyzedText,
    lam: float,
    index: InvertedIndex,
) -> TermDistribution:
    """Anchor a feedback model to its step's query.

    The feedback weight is lam scaled by the idf-weighted similarity between
    the step query and the current query, so feedback from drifted-away steps
    is pulled back toward the query itself.
    """
    lambda_t = lam * generalized_jaccard_sim(q_t, q_n, index)
    return interpolate(1.0 - lambda_t, query_mle(q_t), lambda_t, fm)


def self_clarity_gamma(
    anchored: TermDistribution, prior: TermDistribution, gamma: float
) -> float:
    """Mixing weight for the running session model.

    gamma scaled by exp(-KL(anchored || prior)); an undefined divergence
    (prior ZERO, or missing support) gives exactly 0 so the first informative
    step replaces the empty model outright.
    """
    if prior.is_zero:
        return 0.0
    return gamma * math.exp(-kl_divergence(anchored, prior))


def srm_update(
    prior: TermDistribution, anchored: TermDistribution, gamma_t: float
) -> TermDistribution:
    """One autoregressive update: gamma_t * prior + (1 - gamma_t) * anchored."""
    if prior.is_zero:
        if gamma_t != 0.0:
            raise ValueError("a ZERO prior requires gamma_t == 0")
        return anchored
    return interpolate(gamma_t, prior, 1.0 - gamma_t, anchored)


def build_session_model(
    session: Session, params: SrmParams, index: InvertedIndex
) -> tuple[TermDistribution, SrmTrace]:
    """Walk the whole session and return the final clipped model plus trace.

    History steps whose query analyzes to nothing are skipped (they offer no
    change evidence), though their impressions and clicks still feed later
    feedback sets. A session whose current query analyzes to nothing is an
    error; callers decide whether to skip it.
    """
    q_n = session.current_query
    if not q_n.tokens:
        raise ValueError(
            f"session {session.session_id!r}: current query has no analyzable terms"
        )
    n = len(session.history) + 1
    model = ZERO
    trace = SrmTrace(session_id=session.session_id)
    previous: Optional[AnalyzedText] = None
    for t in range(1, n + 1):
        q_t = session.history[t - 1].query if t < n else q_n
        if not q_t.tokens:
            continue
        change = classify_change(previous, q_t)
        feedback = select_feedback_docs(session, t, params.m, params.mu, index)
        lambda_t = params.lam * generalized_jaccard_sim(q_t, q_n, index)
        if feedback.doc_ids:
            if params.variant == VARIANT_QUERY_CHANGE:
                fm = feedback_model(change, feedback, params.change_priors, index, params.mu)
            else:
                fm = rm1_style_feedback_model(q_t, feedback, index, params.mu)
            anchored = anchor_feedback(fm, q_t, q_n, params.lam, index)
        else:
            # No usable feedback: the anchored model degenerates to the
            # query's own MLE model.
            anchored = query_mle(q_t)
        kl = math.inf if model.is_zero else kl_divergence(anchored, model)
        gamma_t = self_clarity_gamma(anchored, model, params.gamma)
        model = srm_update(model, anchored, gamma_t)
        top = sorted(anchored.items(), key=lambda item: (-item[1], item[0]))[:10]
        trace.records.append(
            StepTrace(
                step=t,
                query_tokens=q_t.tokens,
                change=change,
                feedback=feedback,
                lambda_t=lambda_t,
                gamma_t=gamma_t,
                kl=kl,
                top_terms=tuple(top),
            )
        )
        previous = q_t
    final = clip_distribution(model, params.clip_terms)
    return final, trace


def rerank(
    candidates: RankedList,
    model: TermDistribution,
    index: InvertedIndex,
    mu: float,
) -> RankedList:
    """Re-rank query-likelihood candidates with a session model.

    Candidate scores must be the current query's log likelihoods; the final
    score adds the model's cross entropy against each document. Sorting is
    score descending with doc_id tie-break, so the output does not depend on
    the input order.
    """
    rescored = [
        (doc_id, ql + cross_entropy_score(model, index.doc(doc_id), index.stats, mu))
        for doc_id, ql in candidates
    ]
    return rank_documents(rescored)
