"""Scorer wire protocol service.

    POST /score {"query": "...", "candidates": [{"id": "...", "text": "..."}, ...]}
              -> {"scores": [...]}   # same order and length as candidates
"""

from __future__ import annotations


def build_scorer_app(model):
    from fastapi import FastAPI, HTTPException

    app = FastAPI(title="neural scorer")

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "mode": type(model).__name__}

    @app.post("/score")
    def score(body: dict):
        query = body.get("query")
        candidates = body.get("candidates")
        if not isinstance(query, str) or not isinstance(candidates, list):
            raise HTTPException(status_code=400, detail="need 'query' str and 'candidates' list")
        texts = []
        for c in candidates:
            if not isinstance(c, dict) or "id" not in c or "text" not in c:
                raise HTTPException(status_code=400, detail="candidates need 'id' and 'text'")
            texts.append(str(c["text"]))
        return {"scores": model.score_batch(query, texts)}

    return app


def serve_scorer(model, host: str = "127.0.0.1", port: int = 8200) -> None:
    import uvicorn

    uvicorn.run(build_scorer_app(model), host=host, port=port, log_level="warning")
