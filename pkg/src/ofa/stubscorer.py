"""Protocol-conformant stub scorer services for tests and offline wiring.

Modes:
  * constant: every candidate gets the same score;
  * oracle:   candidates listed as gold for the (normalized) query text score
               1.0, everything else 0.0;
  * overlap:  token-overlap count with the query, a cheap deterministic
               stand-in for a trained scorer.
"""

from __future__ import annotations

from typing import Mapping

from ofa.fleet import normalize_query
from ofa.lexical import tokenize


def build_stub_scorer_app(
    mode: str = "constant",
    value: float = 0.5,
    gold_by_query: Mapping[str, set[str]] | None = None,
):
    from fastapi import FastAPI, HTTPException

    if mode not in ("constant", "oracle", "overlap"):
        raise ValueError(f"unknown stub mode {mode!r}")
    if mode == "oracle" and gold_by_query is None:
        raise ValueError("oracle mode needs gold_by_query")
    gold_by_query = {normalize_query(k): set(v) for k, v in (gold_by_query or {}).items()}

    app = FastAPI(title=f"stub scorer ({mode})")

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "mode": mode}

    @app.post("/score")
    def score(body: dict):
        query = body.get("query")
        candidates = body.get("candidates")
        if not isinstance(query, str) or not isinstance(candidates, list):
            raise HTTPException(status_code=400, detail="need 'query' str and 'candidates' list")
        for c in candidates:
            if not isinstance(c, dict) or "id" not in c or "text" not in c:
                raise HTTPException(status_code=400, detail="candidates need 'id' and 'text'")
        if mode == "constant":
            scores = [value] * len(candidates)
        elif mode == "oracle":
            gold = gold_by_query.get(normalize_query(query), set())
            scores = [1.0 if c["id"] in gold else 0.0 for c in candidates]
        else:
            qtokens = set(tokenize(query))
            scores = [float(len(qtokens & set(tokenize(str(c["text"]))))) for c in candidates]
        return {"scores": scores}

    return app
