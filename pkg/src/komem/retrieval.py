"""Semantic density and density-adaptive retrieval with key-overlap reranking.

The mechanism: embed the query, pull a candidate pool of k * pool_factor by
cosine, and measure the density of the top k — their average pairwise cosine.
A dense neighborhood means the candidates are near-duplicates the embedding
cannot tell apart, so the query's discriminating key tokens are extracted and
candidates sharing them get boosted before the final cut. A sparse
neighborhood passes through as plain top-k, costing nothing extra.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import normalize
from .embed import CorpusIndex, EmbeddingProvider, top_k

__all__ = [
    "Candidate",
    "EmptySet",
    "KeyIndex",
    "RetrievalConfig",
    "RetrievedSet",
    "adaptive_retrieve",
    "build_key_index",
    "density",
    "extract_keys",
    "rerank_by_keys",
]


class EmptySet(ValueError):
    """Density is undefined over zero vectors."""


@dataclass(frozen=True)
class RetrievalConfig:
    k: int = 5
    tau: float = 0.85
    lam: float = 0.5  # boost per overlapping key
    pool_factor: int = 2

    def __post_init__(self) -> None:
        if self.k < 1 or self.lam < 0 or self.pool_factor < 1:
            raise ValueError(f"bad retrieval config: {self}")


@dataclass
class Candidate:
    doc_id: str
    score: float  # final score, possibly boosted
    embedding_score: float
    keys: frozenset[str] = frozenset()


@dataclass
class RetrievedSet:
    candidates: list[Candidate]
    density: float
    triggered: bool
    query_keys: frozenset[str] = frozenset()


@dataclass
class KeyIndex:
    """Normalized key token -> doc_ids, plus the vocabulary for extraction."""

    by_key: dict[str, set[str]] = field(default_factory=dict)
    doc_keys: dict[str, frozenset[str]] = field(default_factory=dict)

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(self.by_key)


def build_key_index(doc_keys: Mapping[str, Iterable[str]]) -> KeyIndex:
    index = KeyIndex()
    for doc_id, keys in doc_keys.items():
        canon = frozenset(normalize(k) for k in keys if normalize(k))
        index.doc_keys[doc_id] = canon
        for key in canon:
            index.by_key.setdefault(key, set()).add(doc_id)
    return index


def density(vectors: Sequence[np.ndarray]) -> float:
    """Average pairwise cosine over a candidate set.

    rho = 2 / (k(k-1)) * sum_{i<j} cos(e_i, e_j). Defined as 0.0 for a single
    vector (one candidate cannot be crowded); raises on the empty set.
    """
    k = len(vectors)
    if k == 0:
        raise EmptySet("density over zero vectors")
    if k == 1:
        return 0.0
    mat = np.asarray(vectors, dtype=np.float64)
    gram = mat @ mat.T
    total = (gram.sum() - np.trace(gram)) / 2.0
    return float(total * 2.0 / (k * (k - 1)))


def extract_keys(query: str, vocabulary: Iterable[str]) -> frozenset[str]:
    """Longest-match, non-overlapping, left-to-right vocabulary scan.

    Matches are aligned to word boundaries of the normalized query, so a
    vocabulary entry "phase 2" wins over "phase" and "2020" never fires
    inside "12020".
    """
    canon = normalize(query)
    vocab = sorted({normalize(v) for v in vocabulary if normalize(v)}, key=len, reverse=True)
    if not canon or not vocab:
        return frozenset()
    found: set[str] = set()
    i = 0
    n = len(canon)
    while i < n:
        if i > 0 and canon[i - 1] != " ":
            i += 1
            continue
        for entry in vocab:
            end = i + len(entry)
            if canon.startswith(entry, i) and (end == n or canon[end] == " "):
                found.add(entry)
                i = end
                break
        else:
            i += 1
    return frozenset(found)


def rerank_by_keys(
    candidates: Sequence[Candidate],
    query_keys: Iterable[str],
    config: RetrievalConfig,
) -> list[Candidate]:
    """Boost each candidate by lam * |query keys shared with its keys|.

    Reordered by boosted score descending; ties keep embedding-score order,
    then doc_id ascending. Embedding scores are preserved on the candidates.
    """
    qkeys = frozenset(normalize(k) for k in query_keys)
    boosted = [
        replace(c, score=c.embedding_score + config.lam * len(qkeys & c.keys))
        for c in candidates
    ]
    boosted.sort(key=lambda c: (-c.score, -c.embedding_score, c.doc_id))
    return boosted


def adaptive_retrieve(
    query: str,
    corpus_index: CorpusIndex,
    key_index: KeyIndex,
    provider: EmbeddingProvider,
    config: RetrievalConfig = RetrievalConfig(),
) -> RetrievedSet:
    """Density-adaptive retrieval over a corpus index.

    Pulls k * pool_factor candidates (clamped to N), measures density over the
    top k, and reranks the full pool by key overlap when density exceeds tau.
    """
    qvec = provider.embed(query)
    pool_size = min(config.k * config.pool_factor, len(corpus_index))
    pool = top_k(corpus_index, qvec, pool_size)
    k = min(config.k, len(pool))

    row = {doc_id: i for i, doc_id in enumerate(corpus_index.doc_ids)}
    head_vecs = [corpus_index.vectors[row[doc_id]] for doc_id, _ in pool[:k]]
    rho = density(head_vecs)

    candidates = [
        Candidate(
            doc_id=doc_id,
            score=score,
            embedding_score=score,
            keys=key_index.doc_keys.get(doc_id, frozenset()),
        )
        for doc_id, score in pool
    ]

    triggered = rho > config.tau
    query_keys: frozenset[str] = frozenset()
    if triggered:
        query_keys = extract_keys(query, key_index.vocabulary)
        candidates = rerank_by_keys(candidates, query_keys, config)
    return RetrievedSet(
        candidates=candidates[: config.k],
        density=rho,
        triggered=triggered,
        query_keys=query_keys,
    )
