"""Question-agent pairing: pick the agent before dispatch.

Two routes:
  * example routing: a one-vs-rest linear model over hashed unigram+bigram
    features, trained on (query, gold agent set) pairs;
  * description routing: similarity of the query against each agent's
    description sentences, scored by a pluggable batch scorer (BM25 default),
    agent score = max over its sentences.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from ofa.lexical import Bm25Params, build_index, bm25_score, tfidf_cosine, tokenize

MODEL_FORMAT = "ofa-router/1"

_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


def split_description(description: str) -> list[str]:
    """Split on '.', '!' or '?' followed by whitespace or end; trim, drop empties.

    Deliberately naive: abbreviations followed by whitespace ("e.g. NYSE") do
    split.  The max-over-sentences combination downstream is robust to that.
    """
    parts = _SENTENCE_BREAK.split(description.strip())
    return [p.strip() for p in parts if p.strip()]


@dataclass(frozen=True)
class SkillSentences:
    agent_id: str
    sentences: tuple[str, ...]


def skills_for(profiles: Sequence) -> list[SkillSentences]:
    return [
        SkillSentences(agent_id=p.id, sentences=tuple(p.skill_sentences))
        for p in profiles
    ]


@dataclass(frozen=True)
class RouterHyperparams:
    learning_rate: float = 0.5
    epochs: int = 20
    l2: float = 1e-6
    seed: int = 0
    batch_size: int = 32
    feature_dim: int = 1 << 18


def _feature_strings(text: str) -> list[str]:
    tokens = tokenize(text)
    feats = list(tokens)
    feats.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return feats


def hash_features(text: str, dim: int) -> dict[int, float]:
    """Signed hashing of unigrams+bigrams into a fixed-size space.

    blake2b keeps the mapping stable across processes (Python's hash() is
    salted per run).
    """
    out: dict[int, float] = {}
    for feat in _feature_strings(text):
        h = int.from_bytes(hashlib.blake2b(feat.encode("utf-8"), digest_size=8).digest(), "big")
        idx = h & (dim - 1)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        out[idx] = out.get(idx, 0.0) + sign
    return out


def _feature_matrix(texts: Sequence[str], dim: int) -> sparse.csr_matrix:
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for text in texts:
        feats = hash_features(text, dim)
        for idx in sorted(feats):
            indices.append(idx)
            data.append(feats[idx])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(texts), dim),
    )


@dataclass(frozen=True)
class ExampleRouterModel:
    feature_dim: int
    agent_ids: tuple[str, ...]
    weights: np.ndarray  # (n_agents, feature_dim)
    biases: np.ndarray  # (n_agents,)
    hyperparams: RouterHyperparams

    def probabilities(self, query_text: str) -> dict[str, float]:
        feats = hash_features(query_text, self.feature_dim)
        idx = np.fromiter(feats.keys(), dtype=np.int64, count=len(feats))
        val = np.fromiter(feats.values(), dtype=np.float64, count=len(feats))
        if len(idx):
            logits = self.weights[:, idx] @ val + self.biases
        else:
            logits = self.biases.copy()
        probs = 1.0 / (1.0 + np.exp(-logits))
        return {a: float(p) for a, p in zip(self.agent_ids, probs)}


def train_example_router(
    examples: Sequence[tuple[str, set[str]]],
    agents: Sequence[str],
    hyperparams: RouterHyperparams | None = None,
) -> ExampleRouterModel:
    """One-vs-rest logistic regression by mini-batch gradient descent.

    Deterministic for a fixed seed and example order.
    """
    hp = hyperparams or RouterHyperparams()
    if not examples:
        raise ValueError("empty training set")
    agent_ids = tuple(agents)
    agent_pos = {a: i for i, a in enumerate(agent_ids)}
    for text, gold in examples:
        unknown = set(gold) - set(agent_pos)
        if unknown:
            raise ValueError(f"gold agents {sorted(unknown)} not in agent list (query {text!r})")

    n = len(examples)
    x = _feature_matrix([t for t, _ in examples], hp.feature_dim)
    y = np.zeros((n, len(agent_ids)))
    for row, (_, gold) in enumerate(examples):
        for a in gold:
            y[row, agent_pos[a]] = 1.0

    w = np.zeros((len(agent_ids), hp.feature_dim))
    b = np.zeros(len(agent_ids))
    rng = np.random.RandomState(hp.seed)
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            batch = order[start : start + hp.batch_size]
            xb = x[batch]
            yb = y[batch]
            logits = xb @ w.T + b  # (batch, agents)
            probs = 1.0 / (1.0 + np.exp(-logits))
            err = (probs - yb) / len(batch)
            grad_w = (xb.T @ err).T  # (agents, dim), sparse matmul
            if hp.l2:
                w *= 1.0 - hp.learning_rate * hp.l2
            w -= hp.learning_rate * grad_w
            b -= hp.learning_rate * err.sum(axis=0)

    w.setflags(write=False)
    b.setflags(write=False)
    return ExampleRouterModel(
        feature_dim=hp.feature_dim, agent_ids=agent_ids, weights=w, biases=b, hyperparams=hp
    )


def route_by_examples(model: ExampleRouterModel, query_text: str) -> list[tuple[str, float]]:
    """Full ranking (agent_id, probability), score desc then id asc."""
    probs = model.probabilities(query_text)
    return sorted(probs.items(), key=lambda kv: (-kv[1], kv[0]))


SentenceScorer = Callable[[str, Sequence[str]], Sequence[float]]
"""Batch similarity: (query, sentences) -> one score per sentence."""


def bm25_sentence_scorer(params: Bm25Params | None = None) -> SentenceScorer:
    """BM25 over the sentence batch as its own micro-corpus."""

    def score(query: str, sentences: Sequence[str]) -> list[float]:
        index = build_index([(str(i), s) for i, s in enumerate(sentences)], params)
        return [bm25_score(index, query, str(i)) for i in range(len(sentences))]

    return score


def tfidf_sentence_scorer(params: Bm25Params | None = None) -> SentenceScorer:
    def score(query: str, sentences: Sequence[str]) -> list[float]:
        index = build_index([(str(i), s) for i, s in enumerate(sentences)], params)
        return [tfidf_cosine(query, s, index) for s in sentences]

    return score


def route_by_description(
    query_text: str,
    skills: Sequence[SkillSentences],
    scorer: SentenceScorer,
    split: bool = True,
) -> list[tuple[str, float]]:
    """Rank agents by max over per-sentence similarity to the query.

    All sentences across agents form one scoring batch, so corpus statistics
    (idf) are shared.  Agents with no sentences score 0.  ``split=False``
    scores each agent's whole description as a single block.
    """
    if not skills:
        raise ValueError("at least one agent required")
    flat: list[str] = []
    spans: list[tuple[str, int, int]] = []
    for sk in skills:
        sentences = list(sk.sentences) if split else ([" ".join(sk.sentences)] if sk.sentences else [])
        start = len(flat)
        flat.extend(sentences)
        spans.append((sk.agent_id, start, len(flat)))

    scores = list(scorer(query_text, flat)) if flat else []
    if len(scores) != len(flat):
        raise ValueError("scorer returned wrong number of scores")
    ranked = []
    for agent_id, start, end in spans:
        best = max(scores[start:end]) if end > start else 0.0
        ranked.append((agent_id, float(best)))
    ranked.sort(key=lambda kv: (-kv[1], kv[0]))
    return ranked


def save_router(model: ExampleRouterModel, path: str | Path) -> None:
    """Versioned text artifact: header line + one sparse weight record per agent.

    Floats go through json (repr round-trip), so reload is bit-exact.
    """
    path = Path(path)
    hp = model.hyperparams
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "format": MODEL_FORMAT,
            "feature_dim": model.feature_dim,
            "agents": list(model.agent_ids),
            "hyperparams": {
                "learning_rate": hp.learning_rate,
                "epochs": hp.epochs,
                "l2": hp.l2,
                "seed": hp.seed,
                "batch_size": hp.batch_size,
                "feature_dim": hp.feature_dim,
            },
        }
        fh.write(json.dumps(header) + "\n")
        for row, agent_id in enumerate(model.agent_ids):
            nz = np.nonzero(model.weights[row])[0]
            fh.write(
                json.dumps(
                    {
                        "agent": agent_id,
                        "bias": float(model.biases[row]),
                        "indices": [int(i) for i in nz],
                        "values": [float(v) for v in model.weights[row, nz]],
                    }
                )
                + "\n"
            )


def load_router(path: str | Path) -> ExampleRouterModel:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported router artifact format {header.get('format')!r}")
        dim = int(header["feature_dim"])
        agent_ids = tuple(header["agents"])
        hp = RouterHyperparams(**header["hyperparams"])
        w = np.zeros((len(agent_ids), dim))
        b = np.zeros(len(agent_ids))
        seen = []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            row = len(seen)
            if rec["agent"] != agent_ids[row]:
                raise ValueError("agent order mismatch in router artifact")
            seen.append(rec["agent"])
            b[row] = rec["bias"]
            idx = np.asarray(rec["indices"], dtype=np.int64)
            if len(idx):
                w[row, idx] = np.asarray(rec["values"])
        if len(seen) != len(agent_ids):
            raise ValueError("router artifact truncated")
    w.setflags(write=False)
    b.setflags(write=False)
    return ExampleRouterModel(feature_dim=dim, agent_ids=agent_ids, weights=w, biases=b, hyperparams=hp)
