"""The gateway runtime: agent registry, parallel fan-out, strategies, HTTP API.

A dispatcher is anything with ``respond(query_text) -> AgentResponse``: a
replay agent in-process, or a :class:`WireAgent` speaking the agent wire
protocol to a live endpoint.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import httpx

from ofa.arbiter import ScorerHandle, score_candidates, select_best
from ofa.model import AgentProfile, AgentResponse
from ofa.protocol import ScorerProtocolError, ScorerUnavailable
from ofa.routing import (
    ExampleRouterModel,
    SentenceScorer,
    bm25_sentence_scorer,
    route_by_description,
    route_by_examples,
    skills_for,
    split_description,
    tfidf_sentence_scorer,
)

APOLOGY_TEXT = "No agent could answer that."

STRATEGY_KINDS = ("qa_examples", "qa_descriptions", "qr")


class Dispatcher(Protocol):
    def respond(self, query_text: str) -> AgentResponse: ...


class WireAgent:
    """Client half of the agent wire protocol."""

    def __init__(self, agent_id: str, endpoint: str, timeout_ms: int = 2000):
        self.agent_id = agent_id
        self.endpoint = endpoint.rstrip("/")
        self.timeout_ms = timeout_ms

    def respond(self, query_text: str) -> AgentResponse:
        started = time.perf_counter()
        try:
            reply = httpx.post(
                f"{self.endpoint}/respond",
                json={"text": query_text},
                timeout=self.timeout_ms / 1000.0,
            )
            reply.raise_for_status()
            body = reply.json()
        except httpx.TimeoutException:
            return AgentResponse(self.agent_id, "", "timeout", latency_ms=self.timeout_ms)
        except (httpx.HTTPError, ValueError):
            return AgentResponse(
                self.agent_id, "", "error",
                latency_ms=int((time.perf_counter() - started) * 1000),
            )
        elapsed = int((time.perf_counter() - started) * 1000)
        status = body.get("status", "answered")
        text = str(body.get("text", ""))
        if status not in ("answered", "fallback") or (status == "answered" and not text):
            return AgentResponse(self.agent_id, "", "error", latency_ms=elapsed)
        return AgentResponse(self.agent_id, text, status, latency_ms=elapsed)


class Registry:
    """Insertion-ordered agent registry; many readers, exclusive mutation."""

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._entries: dict[str, tuple[AgentProfile, Dispatcher | None]] = {}

    def register(self, profile: AgentProfile, dispatcher: Dispatcher | None = None) -> None:
        with self._lock:
            if profile.id in self._entries:
                raise ValueError(f"agent {profile.id!r} already registered")
            if not profile.skill_sentences and profile.description:
                profile = AgentProfile(
                    id=profile.id,
                    display_name=profile.display_name,
                    description=profile.description,
                    skill_sentences=tuple(split_description(profile.description)),
                    endpoint=profile.endpoint,
                )
            if dispatcher is None and profile.endpoint:
                dispatcher = WireAgent(profile.id, profile.endpoint)
            self._entries[profile.id] = (profile, dispatcher)

    def remove(self, agent_id: str) -> None:
        with self._lock:
            if agent_id not in self._entries:
                raise KeyError(f"no agent {agent_id!r}")
            del self._entries[agent_id]

    def profiles(self) -> list[AgentProfile]:
        with self._lock:
            return [profile for profile, _ in self._entries.values()]

    def entries(self) -> list[tuple[AgentProfile, Dispatcher | None]]:
        with self._lock:
            return list(self._entries.values())

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def __contains__(self, agent_id: str) -> bool:
        with self._lock:
            return agent_id in self._entries


def register_agent(registry: Registry, profile: AgentProfile, dispatcher: Dispatcher | None = None) -> Registry:
    registry.register(profile, dispatcher)
    return registry


@dataclass(frozen=True)
class FanoutConfig:
    per_agent_timeout_ms: int = 2000
    max_parallelism: int | None = None  # None = one worker per agent

    def __post_init__(self) -> None:
        if self.per_agent_timeout_ms <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class Strategy:
    kind: str
    scorer: ScorerHandle | None = None
    router_model: ExampleRouterModel | None = None
    filter_fallbacks: bool = False
    split_descriptions: bool = True

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "qa_examples" and self.router_model is None:
            raise ValueError("qa_examples strategy requires a router model")
        if self.kind in ("qa_descriptions", "qr") and self.scorer is None:
            raise ValueError(f"{self.kind} strategy requires a scorer")


@dataclass(frozen=True)
class CandidateView:
    agent_id: str
    text: str
    status: str
    score: float | None
    latency_ms: int

    def to_json(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "text": self.text,
            "status": self.status,
            "score": self.score,
            "latency_ms": self.latency_ms,
        }


@dataclass(frozen=True)
class AskResult:
    query_text: str
    strategy_kind: str
    selected_agent: str | None
    answer_text: str
    resolved: bool
    candidates: tuple[CandidateView, ...]
    total_latency_ms: int

    def to_json(self) -> dict:
        return {
            "query_text": self.query_text,
            "strategy_kind": self.strategy_kind,
            "selected_agent": self.selected_agent,
            "answer_text": self.answer_text,
            "resolved": self.resolved,
            "candidates": [c.to_json() for c in self.candidates],
            "total_latency_ms": self.total_latency_ms,
        }


def fan_out(
    query_text: str,
    agents: Sequence[tuple[AgentProfile, Dispatcher | None]],
    config: FanoutConfig | None = None,
) -> list[AgentResponse]:
    """Dispatch to every agent concurrently; one response per agent, registry order.

    Agents still running at the per-agent deadline are reported as timeouts and
    abandoned (their worker thread finishes in the background).
    """
    config = config or FanoutConfig()
    if not agents:
        raise ValueError("fan_out requires at least one agent")
    workers = config.max_parallelism or len(agents)

    def call(profile: AgentProfile, dispatcher: Dispatcher | None) -> AgentResponse:
        if dispatcher is None:
            return AgentResponse(profile.id, "", "error", latency_ms=0)
        started = time.perf_counter()
        try:
            response = dispatcher.respond(query_text)
        except Exception:
            return AgentResponse(
                profile.id, "", "error", latency_ms=int((time.perf_counter() - started) * 1000)
            )
        if response.agent_id != profile.id:
            return AgentResponse(profile.id, "", "error", latency_ms=response.latency_ms)
        return response

    executor = ThreadPoolExecutor(max_workers=workers)
    started = time.perf_counter()
    deadline = started + config.per_agent_timeout_ms / 1000.0
    futures = [executor.submit(call, profile, dispatcher) for profile, dispatcher in agents]
    results: list[AgentResponse] = []
    for (profile, _), future in zip(agents, futures):
        remaining = max(0.0, deadline - time.perf_counter())
        try:
            results.append(future.result(timeout=remaining))
        except FutureTimeout:
            future.cancel()
            results.append(
                AgentResponse(profile.id, "", "timeout", latency_ms=config.per_agent_timeout_ms)
            )
    executor.shutdown(wait=False)
    return results


def _sentence_scorer_for(handle: ScorerHandle) -> SentenceScorer:
    if handle.kind == "bm25":
        return bm25_sentence_scorer()
    if handle.kind == "tfidf_cosine":
        return tfidf_sentence_scorer()

    def remote(query: str, sentences: Sequence[str]) -> list[float]:
        pairs = [(str(i), s) for i, s in enumerate(sentences)]
        return [s for _, s in score_candidates(handle, query, pairs)]

    return remote


def _dispatch_one(
    query_text: str,
    entry: tuple[AgentProfile, Dispatcher | None],
    config: FanoutConfig,
) -> AgentResponse:
    return fan_out(query_text, [entry], config)[0]


def ask(
    query_text: str,
    strategy: Strategy,
    registry: Registry,
    config: FanoutConfig | None = None,
) -> AskResult:
    """Run one query through the chosen strategy and return the full trace."""
    config = config or FanoutConfig()
    entries = registry.entries()
    if not entries:
        raise ValueError("registry is empty")
    started = time.perf_counter()

    if strategy.kind == "qr":
        responses = fan_out(query_text, entries, config)
        candidates = [
            r for r in responses
            if r.status == "answered" or (r.status == "fallback" and not strategy.filter_fallbacks)
        ]
        scored = score_candidates(strategy.scorer, query_text, [(r.agent_id, r.text) for r in candidates])
        arbitration = select_best(scored, texts={r.agent_id: r.text for r in candidates})
        score_by_agent = dict(scored)
        by_agent = {r.agent_id: r for r in responses}
        selected = arbitration.selected_agent
        resolved = selected is not None and by_agent[selected].status == "answered"
        views = tuple(
            CandidateView(
                agent_id=r.agent_id,
                text=r.text,
                status=r.status,
                score=score_by_agent.get(r.agent_id),
                latency_ms=r.latency_ms,
            )
            for r in responses
        )
        answer = by_agent[selected].text if resolved else APOLOGY_TEXT
    else:
        if strategy.kind == "qa_examples":
            ranking = route_by_examples(strategy.router_model, query_text)
            registered = {p.id for p, _ in entries}
            ranking = [(a, s) for a, s in ranking if a in registered]
            if not ranking:
                raise ValueError("router model covers none of the registered agents")
        else:
            scorer = _sentence_scorer_for(strategy.scorer)
            ranking = route_by_description(
                query_text,
                skills_for([p for p, _ in entries]),
                scorer,
                split=strategy.split_descriptions,
            )
        selected, routing_score = ranking[0]
        entry = next(e for e in entries if e[0].id == selected)
        response = _dispatch_one(query_text, entry, config)
        resolved = response.status == "answered"
        views = (
            CandidateView(
                agent_id=response.agent_id,
                text=response.text,
                status=response.status,
                score=routing_score,
                latency_ms=response.latency_ms,
            ),
        )
        answer = response.text if resolved else APOLOGY_TEXT

    return AskResult(
        query_text=query_text,
        strategy_kind=strategy.kind,
        selected_agent=selected,
        answer_text=answer,
        resolved=resolved,
        candidates=views,
        total_latency_ms=int((time.perf_counter() - started) * 1000),
    )


@dataclass
class GatewayConfig:
    agents_path: str | None = None
    dataset_path: str | None = None
    router_model_path: str | None = None
    scorer: str = "bm25"
    scorer_endpoint: str | None = None
    timeout_ms: int = 2000
    fallback_phrases: tuple[str, ...] = ()
    filter_fallbacks: bool = False
    host: str = "127.0.0.1"
    port: int = 8080
    ui_dir: str | None = None
    vote_threshold: int = 3
    extra: dict = field(default_factory=dict)


def load_config(path: str | Path | None = None) -> GatewayConfig:
    """Read the JSON config file; OFA_CONFIG supplies the path when not given."""
    if path is None:
        path = os.environ.get("OFA_CONFIG")
    if path is None:
        return GatewayConfig()
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("config file must hold a JSON object")
    cfg = GatewayConfig()
    known = {
        "agents_path", "dataset_path", "router_model_path", "scorer", "scorer_endpoint",
        "timeout_ms", "fallback_phrases", "filter_fallbacks", "host", "port", "ui_dir",
        "vote_threshold",
    }
    for key, value in raw.items():
        if key in known:
            if key == "fallback_phrases":
                value = tuple(value)
            setattr(cfg, key, value)
        else:
            cfg.extra[key] = value
    return cfg


def scorer_from_spec(spec: str, timeout_ms: int = 2000, endpoint: str | None = None) -> ScorerHandle:
    """Parse ``bm25``, ``tfidf``, ``remote`` or ``remote:<endpoint>``."""
    if spec.startswith("remote"):
        _, _, inline = spec.partition(":")
        target = inline or endpoint
        return ScorerHandle(kind="remote", remote_endpoint=target, timeout_ms=timeout_ms)
    kind = {"bm25": "bm25", "tfidf": "tfidf_cosine", "tfidf_cosine": "tfidf_cosine"}.get(spec)
    if kind is None:
        raise ValueError(f"unknown scorer spec {spec!r}")
    return ScorerHandle(kind=kind, timeout_ms=timeout_ms)


def normalize_strategy_kind(raw: str) -> str:
    kind = raw.strip().lower().replace("-", "_")
    if kind not in STRATEGY_KINDS:
        raise ValueError(f"unknown strategy {raw!r}")
    return kind


def build_gateway_app(
    registry: Registry,
    config: GatewayConfig | None = None,
    router_model: ExampleRouterModel | None = None,
):
    """FastAPI app exposing the serving API over a shared registry."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse

    config = config or GatewayConfig()
    app = FastAPI(title="ofa gateway")
    fanout = FanoutConfig(per_agent_timeout_ms=config.timeout_ms)

    def profile_json(p: AgentProfile) -> dict:
        return {
            "id": p.id,
            "name": p.display_name,
            "description": p.description,
            "skill_sentences": list(p.skill_sentences),
            "endpoint": p.endpoint,
        }

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "agents": len(registry)}

    @app.get("/agents")
    def get_agents():
        return [profile_json(p) for p in registry.profiles()]

    @app.post("/agents", status_code=201)
    def post_agent(body: dict):
        agent_id = body.get("id")
        if not agent_id or not isinstance(agent_id, str):
            raise HTTPException(status_code=400, detail="profile needs an 'id'")
        profile = AgentProfile(
            id=agent_id,
            display_name=str(body.get("name") or agent_id),
            description=str(body.get("description") or ""),
            endpoint=body.get("endpoint"),
        )
        try:
            registry.register(profile)
        except ValueError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return profile_json(registry.profiles()[-1])

    @app.delete("/agents/{agent_id}")
    def delete_agent(agent_id: str):
        try:
            registry.remove(agent_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc.args[0]))
        return JSONResponse({"removed": agent_id})

    @app.post("/ask")
    def post_ask(body: dict):
        text = body.get("text")
        if not isinstance(text, str) or not text.strip():
            raise HTTPException(status_code=400, detail="body needs a non-empty 'text'")
        try:
            kind = normalize_strategy_kind(str(body.get("strategy", "qr")))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            scorer = scorer_from_spec(
                str(body.get("scorer", config.scorer)),
                timeout_ms=config.timeout_ms,
                endpoint=config.scorer_endpoint,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            strategy = Strategy(
                kind=kind,
                scorer=scorer,
                router_model=router_model,
                filter_fallbacks=bool(body.get("filter_fallbacks", config.filter_fallbacks)),
            )
            result = ask(text, strategy, registry, fanout)
        except (ScorerUnavailable, ScorerProtocolError) as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return result.to_json()

    if config.ui_dir and Path(config.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app


def serve(config: GatewayConfig, registry: Registry, router_model: ExampleRouterModel | None = None) -> None:
    import uvicorn

    app = build_gateway_app(registry, config, router_model)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
