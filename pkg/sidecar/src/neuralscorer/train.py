"""Training: listwise softmax over candidate logits against the gold index.

Per query the candidate list is one sampled gold response plus k sampled
in-example negatives.  A pointwise binary-cross-entropy variant is exposed for
ablation.  Everything is seeded and single-threaded: two runs with the same
seed produce identical loss traces and weights.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from neuralscorer.model import BiEncoder, CrossEncoder, add_grads, pack


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 3e-3
    batch: int = 8  # queries per optimizer step
    negatives_per_query: int = 3
    seed: int = 0
    loss: str = "listwise"  # or "pointwise"

    def __post_init__(self) -> None:
        if self.negatives_per_query < 1:
            raise ValueError("negatives_per_query must be >= 1")
        if self.loss not in ("listwise", "pointwise"):
            raise ValueError(f"unknown loss {self.loss!r}")


@dataclass(frozen=True)
class TrainExample:
    query: str
    gold: tuple[str, ...]
    negatives: tuple[str, ...]


@dataclass
class TrainResult:
    loss_trace: list[float] = field(default_factory=list)
    skipped: int = 0


def prepare_examples(raw: list[tuple[str, list[str], list[str]]]) -> tuple[list[TrainExample], int]:
    """Keep queries with at least one gold and one negative; count the rest."""
    usable: list[TrainExample] = []
    skipped = 0
    for query, gold, negatives in raw:
        if gold and negatives:
            usable.append(TrainExample(query, tuple(gold), tuple(negatives)))
        else:
            skipped += 1
    return usable, skipped


def load_examples(path: str | Path, split: str = "train", vote_threshold: int = 3):
    """Read the gateway's dataset JSONL schema into training triples."""
    raw: list[tuple[str, list[str], list[str]]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("split") != split:
            continue
        if "gold" in rec:
            gold_ids = set(rec["gold"])
        else:
            gold_ids = {
                r["agent"] for r in rec["responses"] if r.get("votes", 0) >= vote_threshold
            }
        gold = [r["text"] for r in rec["responses"] if r["agent"] in gold_ids and r["text"].strip()]
        negatives = [
            r["text"] for r in rec["responses"] if r["agent"] not in gold_ids and r["text"].strip()
        ]
        raw.append((rec["text"], gold, negatives))
    return prepare_examples(raw)


class Adam:
    def __init__(self, learning_rate: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            mhat = self.m[name] / (1 - self.beta1**self.t)
            vhat = self.v[name] / (1 - self.beta2**self.t)
            params[name] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def _sample_candidates(ex: TrainExample, k: int, rng: random.Random) -> tuple[list[str], int]:
    gold = rng.choice(ex.gold)
    negatives = list(ex.negatives)
    picked = rng.sample(negatives, min(k, len(negatives)))
    candidates = [gold] + picked
    return candidates, 0  # gold index is always position 0 pre-shuffle


def _group_loss_and_dlogits(logits: np.ndarray, gold_idx: int, kind: str):
    if kind == "listwise":
        z = logits - logits.max()
        p = np.exp(z) / np.exp(z).sum()
        loss = -float(np.log(max(p[gold_idx], 1e-300)))
        dlogits = p.copy()
        dlogits[gold_idx] -= 1.0
        return loss, dlogits
    labels = np.zeros_like(logits)
    labels[gold_idx] = 1.0
    s = 1.0 / (1.0 + np.exp(-logits))
    loss = float(-(labels * np.log(s + 1e-12) + (1 - labels) * np.log(1 - s + 1e-12)).mean())
    return loss, (s - labels) / len(logits)


def _cross_group_pass(model: CrossEncoder, query: str, candidates: list[str], gold_idx: int, kind: str):
    ids, mask = pack([model.pair_ids(query, c) for c in candidates])
    logits, cache = model.forward_logits(ids, mask)
    loss, dlogits = _group_loss_and_dlogits(logits, gold_idx, kind)
    grads = model.backward(dlogits, cache)
    return loss, grads


def _bi_group_pass(model: BiEncoder, query: str, candidates: list[str], gold_idx: int, kind: str):
    qvec, qcache = model.encode_batch([query])
    rvecs, rcache = model.encode_batch(candidates)
    logits = rvecs @ qvec[0]
    loss, dlogits = _group_loss_and_dlogits(logits, gold_idx, kind)
    dq = (dlogits[:, None] * rvecs).sum(axis=0, keepdims=True)
    dr = np.outer(dlogits, qvec[0])
    grads = model.backward_from_pooled(dr, rcache)
    add_grads(grads, model.backward_from_pooled(dq, qcache))
    return loss, grads


def train_cross_encoder(model: CrossEncoder, examples: list[TrainExample], config: TrainConfig) -> TrainResult:
    return _train(model, examples, config, _cross_group_pass)


def train_bi_encoder(model: BiEncoder, examples: list[TrainExample], config: TrainConfig) -> TrainResult:
    return _train(model, examples, config, _bi_group_pass)


def _train(model, examples: list[TrainExample], config: TrainConfig, group_pass) -> TrainResult:
    if not examples:
        raise ValueError("no trainable examples")
    rng = random.Random(config.seed)
    optimizer = Adam(config.learning_rate)
    result = TrainResult()
    for _ in range(config.epochs):
        order = list(range(len(examples)))
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch):
            batch = order[start : start + config.batch]
            total_grads: dict[str, np.ndarray] = {}
            for idx in batch:
                ex = examples[idx]
                candidates, gold_idx = _sample_candidates(ex, config.negatives_per_query, rng)
                loss, grads = group_pass(model, ex.query, candidates, gold_idx, config.loss)
                epoch_loss += loss
                add_grads(total_grads, grads)
            for name in total_grads:
                total_grads[name] /= len(batch)
            optimizer.step(model.params, total_grads)
        result.loss_trace.append(epoch_loss / len(examples))
    return result


def precision_at_1(model, examples: list[TrainExample]) -> float:
    """Fraction of examples whose top-scored candidate is a gold response."""
    if not examples:
        return 0.0
    hits = 0
    for ex in examples:
        candidates = list(ex.gold) + list(ex.negatives)
        scores = model.score_batch(ex.query, candidates)
        if int(np.argmax(scores)) < len(ex.gold):
            hits += 1
    return hits / len(examples)
