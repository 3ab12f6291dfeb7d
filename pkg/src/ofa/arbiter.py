"""Question-response pairing: score returned responses, pick the best.

Local scorers (bm25, tfidf_cosine) treat the candidate set as a per-query
micro-corpus; the remote kind forwards one batch request over the scorer wire
protocol and returns its scores verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import httpx

from ofa.lexical import Bm25Params, bm25_score, build_index, tfidf_cosine
from ofa.protocol import ScorerProtocolError, ScorerUnavailable, parse_scorer_reply, scorer_request

LOCAL_SCORER_KINDS = ("bm25", "tfidf_cosine")

CandidateScorer = Callable[[str, Sequence[tuple[str, str]]], list[tuple[str, float]]]


@dataclass(frozen=True)
class ScorerHandle:
    kind: str  # bm25 | tfidf_cosine | remote
    remote_endpoint: str | None = None
    timeout_ms: int = 2000
    fall_back_to_bm25: bool = False  # on remote failure; default is to error

    def __post_init__(self) -> None:
        if self.kind == "remote" and not self.remote_endpoint:
            raise ValueError("remote scorer requires an endpoint")
        if self.kind not in LOCAL_SCORER_KINDS + ("remote",):
            raise ValueError(f"unknown scorer kind {self.kind!r}")


@dataclass(frozen=True)
class ArbitrationResult:
    ranked: tuple[tuple[str, float], ...]
    selected_agent: str | None
    selected_text: str | None


def _local_scores(kind: str, query: str, candidates: Sequence[tuple[str, str]]) -> list[float]:
    index = build_index(list(candidates), Bm25Params())
    if kind == "bm25":
        return [bm25_score(index, query, cid) for cid, _ in candidates]
    return [tfidf_cosine(query, text, index) for _, text in candidates]


def remote_score(
    endpoint: str,
    query: str,
    candidates: Sequence[tuple[str, str]],
    timeout_ms: int = 2000,
) -> list[float]:
    """One wire-protocol request carrying all candidates for this query."""
    body = scorer_request(query, candidates)
    try:
        reply = httpx.post(endpoint, json=body, timeout=timeout_ms / 1000.0)
    except httpx.TimeoutException as exc:
        raise ScorerUnavailable(f"scorer at {endpoint} timed out after {timeout_ms} ms") from exc
    except httpx.HTTPError as exc:
        raise ScorerUnavailable(f"scorer at {endpoint} unreachable: {exc}") from exc
    if reply.status_code != 200:
        raise ScorerProtocolError(f"scorer at {endpoint} replied {reply.status_code}")
    return parse_scorer_reply(reply.json(), len(candidates))


def score_candidates(
    scorer: ScorerHandle,
    query: str,
    candidates: Sequence[tuple[str, str]],
) -> list[tuple[str, float]]:
    """One score per (agent_id, response_text) candidate, input order preserved."""
    if not candidates:
        return []
    if scorer.kind in LOCAL_SCORER_KINDS:
        scores = _local_scores(scorer.kind, query, candidates)
    else:
        try:
            scores = remote_score(scorer.remote_endpoint, query, candidates, scorer.timeout_ms)
        except (ScorerUnavailable, ScorerProtocolError):
            if not scorer.fall_back_to_bm25:
                raise
            scores = _local_scores("bm25", query, candidates)
    return [(cid, float(s)) for (cid, _), s in zip(candidates, scores)]


def select_best(
    scores: Sequence[tuple[str, float]],
    texts: Mapping[str, str] | None = None,
) -> ArbitrationResult:
    """Argmax with lexicographic agent-id tie-break; empty input selects nothing."""
    ranked = tuple(sorted(scores, key=lambda kv: (-kv[1], kv[0])))
    if not ranked:
        return ArbitrationResult(ranked=(), selected_agent=None, selected_text=None)
    winner = ranked[0][0]
    text = texts.get(winner) if texts is not None else None
    return ArbitrationResult(ranked=ranked, selected_agent=winner, selected_text=text)


def arbitrate(
    scorer: ScorerHandle,
    query: str,
    candidates: Sequence[tuple[str, str]],
) -> ArbitrationResult:
    scores = score_candidates(scorer, query, candidates)
    return select_best(scores, texts=dict(candidates))
