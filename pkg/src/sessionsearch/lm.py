"""Probabilistic primitives: sparse term distributions and LM scoring.

All logarithms are natural. Scores in log space may be -inf (a query term
with zero corpus and document mass); that sentinel is preserved rather than
floored so callers can rank or fail loudly as they see fit.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, Mapping, Sequence

from .analysis import AnalyzedText
from .index import DocumentRecord, CollectionStats, InvertedIndex

NEG_INF = float("-inf")

RankedList = list[tuple[str, float]]


class TermDistribution:
    """A sparse probability distribution over vocabulary terms.

    Instances hold only positive-probability terms. The module constant ZERO
    (empty support) is the induction base for session models; every other
    instance sums to 1.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs: dict[str, float]):
        self._probs = probs

    @classmethod
    def from_weights(cls, weights: Mapping[str, float]) -> "TermDistribution":
        """Normalize non-negative weights into a distribution.

        Zero-weight terms are dropped; total mass must be positive.
        """
        for term, weight in weights.items():
            if weight < 0:
                raise ValueError(f"negative weight for term {term!r}: {weight}")
        total = math.fsum(weights.values())
        if total <= 0:
            raise ValueError("cannot normalize a distribution with no positive mass")
        return cls({t: w / total for t, w in weights.items() if w > 0})

    @property
    def is_zero(self) -> bool:
        return not self._probs

    def get(self, term: str, default: float = 0.0) -> float:
        return self._probs.get(term, default)

    def items(self) -> Iterator[tuple[str, float]]:
        return iter(self._probs.items())

    def support(self):
        return self._probs.keys()

    def total(self) -> float:
        return math.fsum(self._probs.values())

    def as_dict(self) -> dict[str, float]:
        return dict(self._probs)

    def __len__(self) -> int:
        return len(self._probs)

    def __repr__(self) -> str:
        if self.is_zero:
            return "TermDistribution(ZERO)"
        return f"TermDistribution({len(self._probs)} terms)"


ZERO = TermDistribution({})


def interpolate(
    weight_a: float, dist_a: TermDistribution, weight_b: float, dist_b: TermDistribution
) -> TermDistribution:
    """Convex mixture weight_a*A + weight_b*B over the union support.

    A zero weight returns the other distribution unchanged, keeping the
    degenerate mixtures exact rather than renormalized copies.
    """
    if weight_a == 0.0:
        return dist_b
    if weight_b == 0.0:
        return dist_a
    weights: dict[str, float] = {}
    for term, p in dist_a.items():
        weights[term] = weight_a * p
    for term, p in dist_b.items():
        weights[term] = weights.get(term, 0.0) + weight_b * p
    return TermDistribution.from_weights(weights)


def clip_distribution(dist: TermDistribution, max_terms: int) -> TermDistribution:
    """Keep the max_terms highest-probability terms and renormalize.

    Ties at the cutoff are broken lexicographically by term so clipping is
    deterministic.
    """
    if max_terms <= 0:
        raise ValueError(f"max_terms must be positive, got {max_terms}")
    if len(dist) <= max_terms:
        return dist
    kept = sorted(dist.items(), key=lambda item: (-item[1], item[0]))[:max_terms]
    return TermDistribution.from_weights(dict(kept))


def query_mle(query: AnalyzedText) -> TermDistribution:
    """Maximum-likelihood model of a query's own tokens."""
    if not query.tokens:
        raise ValueError("cannot build a model from an empty query")
    return TermDistribution.from_weights(query.counts())


def doc_mle(doc: DocumentRecord) -> TermDistribution:
    """Unsmoothed language model of one document."""
    if doc.length == 0:
        raise ValueError(f"document {doc.doc_id!r} has no analyzed tokens")
    return TermDistribution.from_weights(doc.term_counts)


def smoothed_prob(
    term: str, doc: DocumentRecord, stats: CollectionStats, mu: float
) -> float:
    """Dirichlet-smoothed term probability for one document.

    mu = 0 gives the unsmoothed maximum-likelihood estimate; that requires a
    non-empty document.
    """
    denom = doc.length + mu
    if denom <= 0:
        raise ValueError(
            f"cannot smooth over an empty document ({doc.doc_id!r}) with mu={mu}"
        )
    tf = doc.term_counts.get(term, 0)
    cf = stats.collection_tf.get(term, 0)
    if mu > 0 and cf:
        return (tf + mu * cf / stats.total_tokens) / denom
    return tf / denom


def query_log_likelihood(
    query: AnalyzedText, doc: DocumentRecord, stats: CollectionStats, mu: float
) -> float:
    """Sum of log smoothed probabilities of the query tokens given the doc.

    Order-invariant in the query tokens (multiset semantics). Empty query
    scores 0. A token with zero probability yields -inf.
    """
    score = 0.0
    for term, count in query.counts().items():
        p = smoothed_prob(term, doc, stats, mu)
        if p <= 0.0:
            return NEG_INF
        score += count * math.log(p)
    return score


def kl_divergence(p_dist: TermDistribution, q_dist: TermDistribution) -> float:
    """KL(P || Q) over P's support; +inf when Q misses any P term.

    Both arguments are unsmoothed sparse distributions; P must be non-ZERO.
    """
    if p_dist.is_zero:
        raise ValueError("KL divergence needs a non-empty reference distribution")
    total = 0.0
    for term, p in p_dist.items():
        q = q_dist.get(term)
        if q <= 0.0:
            return math.inf
        total += p * math.log(p / q)
    # Guard against tiny negative float residue when P ~ Q.
    return max(total, 0.0)


def cross_entropy_score(
    model: TermDistribution, doc: DocumentRecord, stats: CollectionStats, mu: float
) -> float:
    """Sum over model terms of p(w|model) * ln p_smoothed(w|doc).

    -inf when any model term has zero smoothed probability (absent from the
    corpus entirely).
    """
    if model.is_zero:
        raise ValueError("cannot score with an empty model")
    if mu <= 0:
        raise ValueError(f"cross-entropy scoring requires mu > 0, got {mu}")
    score = 0.0
    for term, p in model.items():
        sp = smoothed_prob(term, doc, stats, mu)
        if sp <= 0.0:
            return NEG_INF
        score += p * math.log(sp)
    return score


def generalized_jaccard_sim(
    query_a: AnalyzedText, query_b: AnalyzedText, index: InvertedIndex
) -> float:
    """idf-weighted generalized Jaccard similarity of two token multisets.

    sum over the intersection of min(tf) * idf divided by sum over the union
    of max(tf) * idf. Symmetric, in [0, 1]; identical multisets score exactly
    1 and disjoint ones 0. Both queries empty is an error.
    """
    counts_a = query_a.counts()
    counts_b = query_b.counts()
    if not counts_a and not counts_b:
        raise ValueError("similarity of two empty queries is undefined")
    numerator = 0.0
    denominator = 0.0
    for term in sorted(counts_a.keys() | counts_b.keys()):
        weight = index.idf(term)
        tf_a = counts_a.get(term, 0)
        tf_b = counts_b.get(term, 0)
        numerator += min(tf_a, tf_b) * weight
        denominator += max(tf_a, tf_b) * weight
    return numerator / denominator


def known_terms_only(query: AnalyzedText, stats: CollectionStats) -> AnalyzedText:
    """Drop tokens with zero collection frequency.

    Such tokens assign -inf to every document, so they carry no ranking
    signal; every scorer that ranks whole collections discards them the same
    way so that scores stay comparable across methods.
    """
    kept = tuple(t for t in query.tokens if stats.collection_tf.get(t, 0) > 0)
    if len(kept) == len(query.tokens):
        return query
    return AnalyzedText(kept)


def top_k_by_query_likelihood(
    query: AnalyzedText, index: InvertedIndex, mu: float, k: int
) -> RankedList:
    """Rank the documents matching at least one query term by log likelihood.

    Ties break by doc_id ascending. Returns at most k (doc_id, score) pairs.
    """
    scorable = known_terms_only(query, index.stats)
    known = scorable.tokens
    if not known:
        return []
    candidates: set[str] = set()
    for term in dict.fromkeys(known):
        candidates.update(doc_id for doc_id, _ in index.postings.get(term, ()))
    scored = [
        (doc_id, query_log_likelihood(scorable, index.doc(doc_id), index.stats, mu))
        for doc_id in candidates
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def query_likelihood_doc_weights(
    query: AnalyzedText,
    doc_ids: Sequence[str],
    index: InvertedIndex,
    mu: float,
) -> dict[str, float]:
    """Normalized p(d|q) weights over a fixed document set.

    Computed from log likelihoods via a stable log-sum-exp; documents at
    -inf get weight 0. If every document is at -inf the weights fall back
    to uniform (no evidence to prefer any of them).
    """
    if not doc_ids:
        raise ValueError("cannot weight an empty document set")
    lls = [
        query_log_likelihood(query, index.doc(doc_id), index.stats, mu)
        for doc_id in doc_ids
    ]
    peak = max(lls)
    if peak == NEG_INF:
        uniform = 1.0 / len(doc_ids)
        return {doc_id: uniform for doc_id in doc_ids}
    raw = [math.exp(ll - peak) for ll in lls]
    total = math.fsum(raw)
    return {doc_id: w / total for doc_id, w in zip(doc_ids, raw)}


def rank_documents(scores: Iterable[tuple[str, float]]) -> RankedList:
    """Sort (doc_id, score) pairs by score descending, then doc_id ascending."""
    return sorted(scores, key=lambda pair: (-pair[1], pair[0]))


def mix_doc_models(
    doc_weights: Mapping[str, float], index: InvertedIndex
) -> TermDistribution:
    """Weighted mixture of unsmoothed document models."""
    weights: dict[str, float] = {}
    for doc_id, doc_weight in doc_weights.items():
        if doc_weight <= 0.0:
            continue
        for term, p in doc_mle(index.doc(doc_id)).items():
            weights[term] = weights.get(term, 0.0) + doc_weight * p
    return TermDistribution.from_weights(weights)
