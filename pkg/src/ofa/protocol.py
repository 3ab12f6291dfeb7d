"""Wire formats shared by the gateway, the mock fleet and scorer services.

Scorer protocol (one request per query, batch of candidates):
    request:  {"query": "...", "candidates": [{"id": "...", "text": "..."}, ...]}
    response: {"scores": [r1, r2, ...]}   # same order and length as candidates

Agent protocol (spoken to live agents and the replay fleet):
    POST {endpoint}/respond {"text": "..."}
        -> {"agent": "...", "text": "...", "status": "answered"|"fallback"}
"""

from __future__ import annotations

import math
from typing import Callable, Sequence


class ScorerProtocolError(ValueError):
    """Remote scorer replied outside the protocol (shape, length, finiteness)."""


class ScorerUnavailable(RuntimeError):
    """Remote scorer unreachable or timed out; carries no partial scores."""


def scorer_request(query: str, candidates: Sequence[tuple[str, str]]) -> dict:
    return {
        "query": query,
        "candidates": [{"id": cid, "text": text} for cid, text in candidates],
    }


def parse_scorer_reply(body: object, n_candidates: int) -> list[float]:
    """Validate a scorer reply against the request it answers."""
    if not isinstance(body, dict) or "scores" not in body:
        raise ScorerProtocolError("scorer reply missing 'scores'")
    scores = body["scores"]
    if not isinstance(scores, list):
        raise ScorerProtocolError("'scores' is not a list")
    if len(scores) != n_candidates:
        raise ScorerProtocolError(
            f"scorer returned {len(scores)} scores for {n_candidates} candidates"
        )
    out: list[float] = []
    for s in scores:
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not math.isfinite(s):
            raise ScorerProtocolError(f"non-finite or non-numeric score {s!r}")
        out.append(float(s))
    return out


PostFn = Callable[[dict], tuple[int, object]]
"""Transport hook for conformance checks: request body -> (status, reply body)."""


def check_scorer_conformance(post: PostFn) -> list[tuple[str, bool, str]]:
    """Wire-level conformance checks any scorer service must pass.

    Returns (check name, ok, detail) rows; all-ok means conformant.  The same
    checks apply to the in-repo stub scorer and to external sidecars.
    """
    results: list[tuple[str, bool, str]] = []

    def record(name: str, ok: bool, detail: str = "") -> None:
        results.append((name, ok, detail))

    candidates = [{"id": "a", "text": "it is 3 pm"}, {"id": "b", "text": "cannot help"}]
    status, body = post({"query": "what time is it", "candidates": candidates})
    try:
        scores = parse_scorer_reply(body, len(candidates))
        record("length-and-order", status == 200 and len(scores) == 2, f"status={status}")
        record("finite-scores", all(math.isfinite(s) for s in scores))
    except ScorerProtocolError as exc:
        record("length-and-order", False, str(exc))
        record("finite-scores", False, str(exc))

    status, body = post({"query": "anything", "candidates": []})
    ok = status == 200 and isinstance(body, dict) and body.get("scores") == []
    record("empty-candidates", ok, f"status={status} body={body!r}")

    status, _ = post({"candidates": "not-a-list"})
    record("malformed-request-4xx", 400 <= status < 500, f"status={status}")

    # Order preservation: shuffled ids must not shuffle the score positions.
    cands = [{"id": str(i), "text": f"token{i} token{i}"} for i in (3, 1, 2, 0)]
    status, body = post({"query": "token3", "candidates": cands})
    try:
        scores = parse_scorer_reply(body, len(cands))
        record("batch-positional", status == 200 and len(scores) == 4, f"status={status}")
    except ScorerProtocolError as exc:
        record("batch-positional", False, str(exc))
    return results
