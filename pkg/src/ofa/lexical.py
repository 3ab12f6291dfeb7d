"""From-scratch lexical scoring: tokenizer, Okapi BM25 and tf-idf cosine.

The tokenizer is intentionally locked: lowercase, split on any maximal run of
non-alphanumeric characters, drop empties.  No stemming, no stopwords: the
scorers must stay exact oracles for the tests built on top of them.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")


@dataclass(frozen=True)
class Bm25Index:
    """Immutable BM25 index; safe for concurrent scoring reads."""

    doc_ids: tuple[str, ...]
    doc_tokens: tuple[tuple[str, ...], ...]
    doc_frequencies: dict[str, int]
    avg_doc_len: float
    params: Bm25Params
    _order: dict[str, int] = field(repr=False, default_factory=dict)
    _term_freqs: tuple[Counter, ...] = field(repr=False, default=())

    @property
    def size(self) -> int:
        return len(self.doc_ids)

    def idf(self, term: str) -> float:
        # Smoothed Okapi idf: strictly positive even for terms in every doc.
        n, df = self.size, self.doc_frequencies.get(term, 0)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def build_index(docs: list[tuple[str, str]], params: Bm25Params | None = None) -> Bm25Index:
    """Index (doc_id, text) pairs; doc_ids must be unique."""
    params = params or Bm25Params()
    doc_ids: list[str] = []
    doc_tokens: list[tuple[str, ...]] = []
    term_freqs: list[Counter] = []
    df: dict[str, int] = {}
    for doc_id, text in docs:
        if doc_id in set(doc_ids):
            raise ValueError(f"duplicate doc_id {doc_id!r}")
        tokens = tuple(tokenize(text))
        doc_ids.append(doc_id)
        doc_tokens.append(tokens)
        counts = Counter(tokens)
        term_freqs.append(counts)
        for term in counts:
            df[term] = df.get(term, 0) + 1
    n = len(doc_ids)
    avg_len = sum(len(t) for t in doc_tokens) / n if n else 0.0
    return Bm25Index(
        doc_ids=tuple(doc_ids),
        doc_tokens=tuple(doc_tokens),
        doc_frequencies=df,
        avg_doc_len=avg_len,
        params=params,
        _order={d: i for i, d in enumerate(doc_ids)},
        _term_freqs=tuple(term_freqs),
    )


def bm25_score(index: Bm25Index, query: str, doc_id: str) -> float:
    """Okapi BM25 of one document for one query.

    Each query token occurrence contributes idf(t) * tf(k1+1) / (tf + k1*(1 - b
    + b*len/avg_len)); zero overall when the query and document share no terms.
    """
    if doc_id not in index._order:
        raise KeyError(f"unknown doc_id {doc_id!r}")
    pos = index._order[doc_id]
    freqs = index._term_freqs[pos]
    doc_len = len(index.doc_tokens[pos])
    k1, b = index.params.k1, index.params.b
    score = 0.0
    for term in tokenize(query):
        tf = freqs.get(term, 0)
        if tf == 0:
            continue
        norm = k1 * (1.0 - b + b * doc_len / index.avg_doc_len)
        score += index.idf(term) * tf * (k1 + 1.0) / (tf + norm)
    return score


def bm25_scores(index: Bm25Index, query: str) -> list[tuple[str, float]]:
    """Scores for every indexed document, in index order (empty corpus → [])."""
    return [(doc_id, bm25_score(index, query, doc_id)) for doc_id in index.doc_ids]


def _tfidf_vector(tokens: list[str], index: Bm25Index) -> dict[str, float]:
    return {term: tf * index.idf(term) for term, tf in Counter(tokens).items()}


def tfidf_cosine(query: str, doc: str, index: Bm25Index) -> float:
    """Cosine of tf·idf vectors under the index's idf statistics; 0 for a zero vector."""
    qv = _tfidf_vector(tokenize(query), index)
    dv = _tfidf_vector(tokenize(doc), index)
    if not qv or not dv:
        return 0.0
    dot = sum(w * dv[t] for t, w in qv.items() if t in dv)
    qn = math.sqrt(sum(w * w for w in qv.values()))
    dn = math.sqrt(sum(w * w for w in dv.values()))
    if qn == 0.0 or dn == 0.0:
        return 0.0
    return dot / (qn * dn)


def term_statistics(index: Bm25Index, query: str) -> list[dict]:
    """Per-term diagnostics for the score-debug CLI subcommand."""
    rows = []
    for term in tokenize(query):
        row = {
            "term": term,
            "df": index.doc_frequencies.get(term, 0),
            "idf": index.idf(term),
            "per_doc": {
                doc_id: index._term_freqs[i].get(term, 0)
                for i, doc_id in enumerate(index.doc_ids)
                if index._term_freqs[i].get(term, 0)
            },
        }
        rows.append(row)
    return rows
