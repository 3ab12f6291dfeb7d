"""Sidecar entry point: train a scorer, serve it, or verify its gradients."""

from __future__ import annotations

import argparse
import sys

from neuralscorer.checkpoint import load_model, save_model
from neuralscorer.model import BiEncoder, CrossEncoder, EncoderConfig
from neuralscorer.tokenizer import Vocab
from neuralscorer.train import (
    TrainConfig,
    load_examples,
    train_bi_encoder,
    train_cross_encoder,
    precision_at_1,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neuralscorer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a scorer on a dataset JSONL train split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["cross", "bi"], default="cross")
    p.add_argument("--split", default="train")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=3e-3)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--negatives-per-query", type=int, default=3)
    p.add_argument("--loss", choices=["listwise", "pointwise"], default="listwise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embed-dim", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--limit", type=int, help="cap the number of training queries")

    p = sub.add_parser("serve", help="serve a trained model over the scorer protocol")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8200)

    p = sub.add_parser("gradcheck", help="finite-difference check on a seeded toy model")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_train(args) -> int:
    examples, skipped = load_examples(args.dataset, split=args.split)
    if args.limit:
        examples = examples[: args.limit]
    if not examples:
        print("no trainable queries (need >=1 gold and >=1 negative each)", file=sys.stderr)
        return 1
    if skipped:
        print(f"skipped {skipped} queries lacking gold or negatives", file=sys.stderr)
    texts = [ex.query for ex in examples]
    for ex in examples:
        texts.extend(ex.gold)
        texts.extend(ex.negatives)
    vocab = Vocab.build(texts)
    config = EncoderConfig(
        vocab_size=vocab.size,
        embed_dim=args.embed_dim,
        layers=args.layers,
        heads=args.heads,
        max_len=args.max_len,
        seed=args.seed,
    )
    train_config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        batch=args.batch,
        negatives_per_query=args.negatives_per_query,
        seed=args.seed,
        loss=args.loss,
    )
    if args.mode == "cross":
        model = CrossEncoder(config, vocab)
        result = train_cross_encoder(model, examples, train_config)
    else:
        model = BiEncoder(config, vocab)
        result = train_bi_encoder(model, examples, train_config)
    save_model(model, args.out)
    print(
        f"trained {args.mode} encoder on {len(examples)} queries; "
        f"final loss {result.loss_trace[-1]:.4f}; "
        f"train precision@1 {precision_at_1(model, examples):.3f}; -> {args.out}"
    )
    return 0


def _cmd_serve(args) -> int:
    from neuralscorer.serve import serve_scorer

    model = load_model(args.model)
    print(f"scorer ({type(model).__name__}) on http://{args.host}:{args.port}/score")
    serve_scorer(model, host=args.host, port=args.port)
    return 0


def _cmd_gradcheck(args) -> int:
    import numpy as np

    from neuralscorer.gradcheck import grad_check
    from neuralscorer.model import pack

    vocab = Vocab.build(["the weather is sunny today", "didn't get that", "balance loan"])
    config = EncoderConfig(vocab_size=vocab.size, embed_dim=8, layers=2, heads=2, max_len=16, ffn_mult=2, seed=args.seed)
    model = CrossEncoder(config, vocab)
    ids, mask = pack([
        model.pair_ids("weather today", "the weather is sunny today"),
        model.pair_ids("weather today", "didn't get that"),
        model.pair_ids("my balance", "balance loan"),
    ])

    def loss_and_grads():
        logits, cache = model.forward_logits(ids, mask)
        z = logits - logits.max()
        p = np.exp(z) / np.exp(z).sum()
        loss = -float(np.log(p[0]))
        dlogits = p.copy()
        dlogits[0] -= 1.0
        return loss, model.backward(dlogits, cache)

    result = grad_check(model.params, loss_and_grads, eps=args.eps)
    for name in sorted(result.per_group, key=result.per_group.get, reverse=True)[:5]:
        print(f"{name:<16} {result.per_group[name]:.3e}")
    print(f"max relative error: {result.max_relative_error:.3e}")
    return 0 if result.max_relative_error < 1e-4 else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return {"train": _cmd_train, "serve": _cmd_serve, "gradcheck": _cmd_gradcheck}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
