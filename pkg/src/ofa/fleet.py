"""Simulated black-box agents replaying dataset responses, with injectable latency.

Replay is an oracle, not a model: lookup is exact after normalization
(lowercase, collapsed whitespace), unknown queries get the default fallback.
Latency for the uniform spec is a pure function of (seed, agent, query), so
schedules reproduce across runs regardless of request interleaving.
"""

from __future__ import annotations

import hashlib
import logging
import random
import re
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ofa.model import AgentProfile, AgentResponse, Dataset

logger = logging.getLogger(__name__)

DEFAULT_FALLBACK_TEXT = "Didn't get that!"

_WS = re.compile(r"\s+")


def normalize_query(text: str) -> str:
    return _WS.sub(" ", text.strip().lower())


@dataclass(frozen=True)
class LatencySpec:
    """Fixed, per-agent fixed, or seeded-uniform injected latency (milliseconds)."""

    fixed_ms: float = 0.0
    per_agent_ms: Mapping[str, float] | None = None
    uniform_ms: tuple[float, float] | None = None
    seed: int = 0

    def for_request(self, agent_id: str, query_norm: str) -> float:
        if self.per_agent_ms is not None and agent_id in self.per_agent_ms:
            return float(self.per_agent_ms[agent_id])
        if self.uniform_ms is not None:
            lo, hi = self.uniform_ms
            key = f"{self.seed}:{agent_id}:{query_norm}".encode("utf-8")
            digest = hashlib.blake2b(key, digest_size=8).digest()
            rng = random.Random(int.from_bytes(digest, "big"))
            return rng.uniform(lo, hi)
        return self.fixed_ms


@dataclass(frozen=True)
class ReplayAgent:
    profile: AgentProfile
    lookup: Mapping[str, tuple[str, str]]  # normalized query -> (text, status)
    default_fallback: str = DEFAULT_FALLBACK_TEXT
    latency: LatencySpec = field(default_factory=LatencySpec)

    def respond(self, query_text: str, sleep: bool = True) -> AgentResponse:
        norm = normalize_query(query_text)
        delay_ms = self.latency.for_request(self.profile.id, norm)
        if sleep and delay_ms > 0:
            time.sleep(delay_ms / 1000.0)
        hit = self.lookup.get(norm)
        if hit is None:
            text, status = self.default_fallback, "fallback"
        else:
            text, status = hit
        return AgentResponse(
            agent_id=self.profile.id,
            text=text,
            status=status,
            latency_ms=int(round(delay_ms)),
        )


def build_fleet(
    dataset: Dataset,
    latency: LatencySpec | None = None,
    fallback_text: str = DEFAULT_FALLBACK_TEXT,
) -> list[ReplayAgent]:
    """One replay agent per dataset profile; first recorded response wins on collisions."""
    latency = latency or LatencySpec()
    lookups: dict[str, dict[str, tuple[str, str]]] = {p.id: {} for p in dataset.agents}
    for ex in dataset.examples:
        norm = normalize_query(ex.query.text)
        for agent_id, rec in ex.responses.items():
            table = lookups[agent_id]
            if norm in table:
                if table[norm] != (rec.text, rec.status):
                    logger.warning(
                        "agent %s: colliding responses for %r; keeping first", agent_id, norm
                    )
                continue
            table[norm] = (rec.text, rec.status)
    return [
        ReplayAgent(
            profile=p,
            lookup=lookups[p.id],
            default_fallback=fallback_text,
            latency=latency,
        )
        for p in dataset.agents
    ]


def build_fleet_app(agents: Sequence[ReplayAgent]):
    """FastAPI app serving the whole fleet on one port, one path prefix per agent.

    Agent endpoints are ``http://host:port/<agent_id>`` and speak the agent
    wire protocol (``POST <endpoint>/respond``).  Handlers are sync functions,
    so the server runs them on a threadpool and agents sleep independently.
    """
    from fastapi import FastAPI, HTTPException

    app = FastAPI(title="ofa replay fleet")
    by_id = {a.profile.id: a for a in agents}

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "agents": len(by_id)}

    @app.get("/agents")
    def list_agents():
        return [
            {
                "id": a.profile.id,
                "name": a.profile.display_name,
                "description": a.profile.description,
            }
            for a in agents
        ]

    @app.post("/{agent_id}/respond")
    def respond(agent_id: str, body: dict):
        agent = by_id.get(agent_id)
        if agent is None:
            raise HTTPException(status_code=404, detail=f"no agent {agent_id!r}")
        text = body.get("text")
        if not isinstance(text, str):
            raise HTTPException(status_code=400, detail="body must carry a 'text' string")
        response = agent.respond(text)
        return {"agent": response.agent_id, "text": response.text, "status": response.status}

    return app


def serve_fleet(agents: Sequence[ReplayAgent], host: str = "127.0.0.1", port: int = 8100) -> None:
    import uvicorn

    uvicorn.run(build_fleet_app(agents), host=host, port=port, log_level="warning")
