"""Toy transformer encoders with hand-written backprop (numpy, float64).

Two scoring heads over a shared pre-LN encoder stack:

  * CrossEncoder: one joint sequence ``<cls> query <sep> response``, full
    self-attention across the pair, first-position pooling, linear head,
    logistic squashing to a score strictly inside (0, 1);
  * BiEncoder: query and response encoded independently (no specials),
    masked mean pooling, score = dot product of the two pooled vectors.

Gradients are analytic throughout so they can be checked against central
finite differences; see gradcheck.py.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from neuralscorer.tokenizer import CLS, PAD, SEP, Vocab

_GELU_C = math.sqrt(2.0 / math.pi)
_MASK_BIAS = -1e30


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    embed_dim: int = 64
    layers: int = 2
    heads: int = 2
    max_len: int = 64
    ffn_mult: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.embed_dim % self.heads != 0:
            raise ValueError("embed_dim must be divisible by heads")
        if self.vocab_size < 4:
            raise ValueError("vocab must include the reserved specials")


def _gelu(x: np.ndarray) -> np.ndarray:
    u = _GELU_C * (x + 0.044715 * x**3)
    return 0.5 * x * (1.0 + np.tanh(u))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    u = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(u)
    du = _GELU_C * (1.0 + 3 * 0.044715 * x**2)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * du


def _linear_fwd(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    return x @ w + b


def _linear_bwd(dout: np.ndarray, x: np.ndarray, w: np.ndarray):
    din = x.shape[-1]
    dout2 = dout.reshape(-1, dout.shape[-1])
    x2 = x.reshape(-1, din)
    dw = x2.T @ dout2
    db = dout2.sum(axis=0)
    dx = (dout2 @ w.T).reshape(x.shape)
    return dx, dw, db


def _layernorm_fwd(x: np.ndarray, g: np.ndarray, b: np.ndarray, eps: float = 1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    return g * xhat + b, (xhat, inv, g)


def _layernorm_bwd(dout: np.ndarray, cache):
    xhat, inv, g = cache
    dxhat = dout * g
    dg = (dout * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
    db = dout.reshape(-1, dout.shape[-1]).sum(axis=0)
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = inv * (dxhat - m1 - xhat * m2)
    return dx, dg, db


def _softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Encoder:
    """Pre-LN transformer stack over padded id batches."""

    def __init__(self, config: EncoderConfig):
        self.config = config
        rng = np.random.RandomState(config.seed)
        d, f = config.embed_dim, config.embed_dim * config.ffn_mult
        p: dict[str, np.ndarray] = {
            "tok_emb": rng.normal(0.0, 0.02, (config.vocab_size, d)),
            "pos_emb": rng.normal(0.0, 0.02, (config.max_len, d)),
            "final_ln_g": np.ones(d),
            "final_ln_b": np.zeros(d),
        }
        for i in range(config.layers):
            for name in ("q", "k", "v", "o"):
                p[f"l{i}_w{name}"] = rng.normal(0.0, 0.02, (d, d))
                p[f"l{i}_b{name}"] = np.zeros(d)
            p[f"l{i}_ln1_g"] = np.ones(d)
            p[f"l{i}_ln1_b"] = np.zeros(d)
            p[f"l{i}_ln2_g"] = np.ones(d)
            p[f"l{i}_ln2_b"] = np.zeros(d)
            p[f"l{i}_w1"] = rng.normal(0.0, 0.02, (d, f))
            p[f"l{i}_b1"] = np.zeros(f)
            p[f"l{i}_w2"] = rng.normal(0.0, 0.02, (f, d))
            p[f"l{i}_b2"] = np.zeros(d)
        self.params = p

    def _split_heads(self, x: np.ndarray) -> np.ndarray:
        b, t, d = x.shape
        h = self.config.heads
        return x.reshape(b, t, h, d // h).transpose(0, 2, 1, 3)

    def _merge_heads(self, x: np.ndarray) -> np.ndarray:
        b, h, t, dk = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, t, h * dk)

    def forward(self, ids: np.ndarray, mask: np.ndarray):
        """ids, mask: (B, T); returns hidden (B, T, d) and the backward cache."""
        p = self.params
        b, t = ids.shape
        x = p["tok_emb"][ids] + p["pos_emb"][:t]
        key_bias = (1.0 - mask)[:, None, None, :] * _MASK_BIAS  # (B,1,1,T)
        cache: dict = {"ids": ids, "mask": mask, "layers": []}
        dk = self.config.embed_dim // self.config.heads
        scale = 1.0 / math.sqrt(dk)

        for i in range(self.config.layers):
            a, ln1_cache = _layernorm_fwd(x, p[f"l{i}_ln1_g"], p[f"l{i}_ln1_b"])
            q = self._split_heads(_linear_fwd(a, p[f"l{i}_wq"], p[f"l{i}_bq"]))
            k = self._split_heads(_linear_fwd(a, p[f"l{i}_wk"], p[f"l{i}_bk"]))
            v = self._split_heads(_linear_fwd(a, p[f"l{i}_wv"], p[f"l{i}_bv"]))
            scores = q @ k.transpose(0, 1, 3, 2) * scale + key_bias
            probs = _softmax(scores)
            ctx = self._merge_heads(probs @ v)
            attn = _linear_fwd(ctx, p[f"l{i}_wo"], p[f"l{i}_bo"])
            x1 = x + attn

            f_in, ln2_cache = _layernorm_fwd(x1, p[f"l{i}_ln2_g"], p[f"l{i}_ln2_b"])
            pre = _linear_fwd(f_in, p[f"l{i}_w1"], p[f"l{i}_b1"])
            act = _gelu(pre)
            ffn = _linear_fwd(act, p[f"l{i}_w2"], p[f"l{i}_b2"])
            x_next = x1 + ffn

            cache["layers"].append(
                {"a": a, "ln1": ln1_cache, "q": q, "k": k, "v": v, "probs": probs,
                 "ctx": ctx, "x1": x1, "f_in": f_in, "ln2": ln2_cache, "pre": pre, "act": act}
            )
            x = x_next

        hidden, final_cache = _layernorm_fwd(x, p["final_ln_g"], p["final_ln_b"])
        cache["pre_final"] = x
        cache["final"] = final_cache
        return hidden, cache

    def backward(self, dhidden: np.ndarray, cache: dict) -> dict[str, np.ndarray]:
        p = self.params
        grads: dict[str, np.ndarray] = {}
        dk_dim = self.config.embed_dim // self.config.heads
        scale = 1.0 / math.sqrt(dk_dim)

        dx, dg, db = _layernorm_bwd(dhidden, cache["final"])
        grads["final_ln_g"] = dg
        grads["final_ln_b"] = db

        for i in reversed(range(self.config.layers)):
            lc = cache["layers"][i]
            # FFN branch
            dffn = dx
            dact, dw2, db2 = _linear_bwd(dffn, lc["act"], p[f"l{i}_w2"])
            dpre = dact * _gelu_grad(lc["pre"])
            df_in, dw1, db1 = _linear_bwd(dpre, lc["f_in"], p[f"l{i}_w1"])
            dx1, dg2, db2n = _layernorm_bwd(df_in, lc["ln2"])
            dx1 = dx1 + dx  # residual
            grads[f"l{i}_w2"], grads[f"l{i}_b2"] = dw2, db2
            grads[f"l{i}_w1"], grads[f"l{i}_b1"] = dw1, db1
            grads[f"l{i}_ln2_g"], grads[f"l{i}_ln2_b"] = dg2, db2n

            # Attention branch
            dattn = dx1
            dctx, dwo, dbo = _linear_bwd(dattn, lc["ctx"], p[f"l{i}_wo"])
            dctx_h = self._split_heads(dctx)
            dprobs = dctx_h @ lc["v"].transpose(0, 1, 3, 2)
            dv = lc["probs"].transpose(0, 1, 3, 2) @ dctx_h
            dscores = (dprobs - (dprobs * lc["probs"]).sum(axis=-1, keepdims=True)) * lc["probs"]
            dq = dscores @ lc["k"] * scale
            dk = dscores.transpose(0, 1, 3, 2) @ lc["q"] * scale
            da_q, dwq, dbq = _linear_bwd(self._merge_heads(dq), lc["a"], p[f"l{i}_wq"])
            da_k, dwk, dbk = _linear_bwd(self._merge_heads(dk), lc["a"], p[f"l{i}_wk"])
            da_v, dwv, dbv = _linear_bwd(self._merge_heads(dv), lc["a"], p[f"l{i}_wv"])
            da = da_q + da_k + da_v
            dx_ln1, dg1, db1n = _layernorm_bwd(da, lc["ln1"])
            dx = dx_ln1 + dx1  # residual
            grads[f"l{i}_wo"], grads[f"l{i}_bo"] = dwo, dbo
            grads[f"l{i}_wq"], grads[f"l{i}_bq"] = dwq, dbq
            grads[f"l{i}_wk"], grads[f"l{i}_bk"] = dwk, dbk
            grads[f"l{i}_wv"], grads[f"l{i}_bv"] = dwv, dbv
            grads[f"l{i}_ln1_g"], grads[f"l{i}_ln1_b"] = dg1, db1n

        ids = cache["ids"]
        grads["tok_emb"] = np.zeros_like(p["tok_emb"])
        np.add.at(grads["tok_emb"], ids, dx)
        grads["pos_emb"] = np.zeros_like(p["pos_emb"])
        grads["pos_emb"][: ids.shape[1]] = dx.sum(axis=0)
        return grads


def pack(sequences: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    """Pad id lists to a (B, T) batch plus its 0/1 mask; empty batch -> (B, 1)."""
    width = max((len(s) for s in sequences), default=0) or 1
    ids = np.full((len(sequences), width), PAD, dtype=np.int64)
    mask = np.zeros((len(sequences), width))
    for row, seq in enumerate(sequences):
        ids[row, : len(seq)] = seq
        mask[row, : len(seq)] = 1.0
    return ids, mask


def masked_mean_pool(hidden: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Mean over valid positions; all-masked rows pool to the zero vector."""
    counts = np.maximum(mask.sum(axis=1, keepdims=True), 1.0)
    return (hidden * mask[:, :, None]).sum(axis=1) / counts


def _mean_pool_bwd(dpooled: np.ndarray, mask: np.ndarray) -> np.ndarray:
    counts = np.maximum(mask.sum(axis=1, keepdims=True), 1.0)
    return dpooled[:, None, :] * (mask / counts)[:, :, None]


class CrossEncoder:
    """Joint query+response encoder with a scalar scoring head."""

    def __init__(self, config: EncoderConfig, vocab: Vocab):
        self.config = config
        self.vocab = vocab
        self.encoder = Encoder(config)
        rng = np.random.RandomState(config.seed + 1)
        self.params = self.encoder.params
        self.params["head_w"] = rng.normal(0.0, 0.02, (config.embed_dim,))
        self.params["head_b"] = np.zeros(1)

    def pair_ids(self, query: str, response: str) -> list[int]:
        # <cls> q <sep> r, truncating the response side; the query is only cut
        # when it alone would overflow the window.
        budget = self.config.max_len - 2
        q = self.vocab.encode(query)
        r = self.vocab.encode(response)
        if len(q) > budget:
            q = q[: budget - 1] if r else q[:budget]
        r = r[: budget - len(q)]
        return [CLS] + q + [SEP] + r

    def forward_logits(self, ids: np.ndarray, mask: np.ndarray):
        hidden, enc_cache = self.encoder.forward(ids, mask)
        pooled = hidden[:, 0, :]  # first-position pooling: <cls>
        logits = pooled @ self.params["head_w"] + self.params["head_b"][0]
        return logits, {"enc": enc_cache, "pooled": pooled, "hidden_shape": hidden.shape}

    def backward(self, dlogits: np.ndarray, cache: dict) -> dict[str, np.ndarray]:
        pooled = cache["pooled"]
        grads = {
            "head_w": pooled.T @ dlogits,
            "head_b": np.array([dlogits.sum()]),
        }
        dpooled = np.outer(dlogits, self.params["head_w"])
        dhidden = np.zeros(cache["hidden_shape"])
        dhidden[:, 0, :] = dpooled
        grads.update(self.encoder.backward(dhidden, cache["enc"]))
        return grads

    def logits(self, query: str, responses: list[str]) -> np.ndarray:
        if not responses:
            return np.zeros(0)
        ids, mask = pack([self.pair_ids(query, r) for r in responses])
        logits, _ = self.forward_logits(ids, mask)
        return logits

    def score(self, query: str, response: str) -> float:
        """Scalar in (0, 1): logistic over the pair logit."""
        return float(1.0 / (1.0 + np.exp(-self.logits(query, [response])[0])))

    def score_batch(self, query: str, responses: list[str]) -> list[float]:
        return [float(s) for s in 1.0 / (1.0 + np.exp(-self.logits(query, responses)))]


class BiEncoder:
    """Siamese encoder; score is the dot product of mean-pooled encodings."""

    def __init__(self, config: EncoderConfig, vocab: Vocab):
        self.config = config
        self.vocab = vocab
        self.encoder = Encoder(config)
        self.params = self.encoder.params

    def text_ids(self, text: str) -> list[int]:
        return self.vocab.encode(text)[: self.config.max_len]

    def encode_batch(self, texts: list[str]):
        ids, mask = pack([self.text_ids(t) for t in texts])
        hidden, cache = self.encoder.forward(ids, mask)
        pooled = masked_mean_pool(hidden, mask)
        return pooled, {"enc": cache, "mask": mask}

    def encode(self, text: str) -> np.ndarray:
        return self.encode_batch([text])[0][0]

    def backward_from_pooled(self, dpooled: np.ndarray, cache: dict) -> dict[str, np.ndarray]:
        dhidden = _mean_pool_bwd(dpooled, cache["mask"])
        return self.encoder.backward(dhidden, cache["enc"])

    def score(self, query: str, response: str) -> float:
        return float(self.encode(query) @ self.encode(response))

    def score_batch(self, query: str, responses: list[str]) -> list[float]:
        if not responses:
            return []
        qvec = self.encode(query)
        rvecs, _ = self.encode_batch(responses)
        return [float(s) for s in rvecs @ qvec]


def add_grads(total: dict[str, np.ndarray], part: dict[str, np.ndarray]) -> None:
    for name, g in part.items():
        if name in total:
            total[name] = total[name] + g
        else:
            total[name] = g.copy()
