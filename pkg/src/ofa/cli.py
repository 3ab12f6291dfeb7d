"""Operator entry point: one binary, subcommands for every piece of the system.

Exit codes: 0 success, 1 validation/runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ofa import evaluate, synth
from ofa.fleet import LatencySpec, build_fleet, serve_fleet
from ofa.gateway import (
    GatewayConfig,
    Registry,
    Strategy,
    load_config,
    normalize_strategy_kind,
    scorer_from_spec,
    serve,
)
from ofa.lexical import build_index, bm25_score, term_statistics
from ofa.model import (
    DatasetError,
    dataset_stats,
    load_agents,
    load_dataset,
    save_agents,
    save_dataset,
    with_profiles,
)
from ofa.routing import RouterHyperparams, load_router, save_router, train_example_router


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", help="dataset JSONL path")
    parser.add_argument("--agents", help="agent profile JSONL path")
    parser.add_argument("--config", help="config file (default: $OFA_CONFIG)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ofa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="lint a dataset and print split statistics")
    _add_common(p)
    p.add_argument("--vote-threshold", type=int, default=3)
    p.add_argument("--verbose", action="store_true", help="also print per-domain counts")

    p = sub.add_parser("train-router", help="train the example router on the train split")
    _add_common(p)
    p.add_argument("--out", required=True, help="router artifact output path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=1e-6)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--include-no-gold", action="store_true")

    p = sub.add_parser("eval", help="run the evaluation harness and write a report")
    _add_common(p)
    p.add_argument("--strategy", default="qr", help="qa-examples | qa-descriptions | qr")
    p.add_argument("--scorer", default="bm25", help="bm25 | tfidf | remote:<endpoint>")
    p.add_argument("--router-model", help="router artifact (qa-examples); trained fresh when absent")
    p.add_argument("--split", default="test", choices=["train", "test"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout-ms", type=int, default=2000)
    p.add_argument("--filter-fallbacks", action="store_true")
    p.add_argument("--include-no-gold", action="store_true")
    p.add_argument("--out", help="records-format report output path")

    p = sub.add_parser("serve", help="run the gateway HTTP service")
    _add_common(p)
    p.add_argument("--port", type=int)
    p.add_argument("--host")
    p.add_argument("--scorer")
    p.add_argument("--timeout-ms", type=int)
    p.add_argument("--router-model")
    p.add_argument("--ui-dir", help="static chat UI directory to mount at /ui")

    p = sub.add_parser("fleet", help="serve the replay fleet over the agent wire protocol")
    _add_common(p)
    p.add_argument("--port", type=int, default=8100)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--latency-ms", type=float, default=0.0)
    p.add_argument("--latency-range", help="min,max uniform latency in ms")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("score-debug", help="print per-term BM25 statistics as JSONL")
    _add_common(p)
    p.add_argument("--query", required=True)
    p.add_argument("--docs", help="JSONL corpus of {'id','text'}; default: agent descriptions")

    p = sub.add_parser("synth", help="generate the synthetic replica corpus")
    p.add_argument("--out", required=True, help="dataset JSONL output path")
    p.add_argument("--agents-out", help="agent profile JSONL output path")
    p.add_argument("--seed", type=int, default=7)

    return parser


def _load(args) -> tuple:
    profiles = load_agents(args.agents) if args.agents else None
    threshold = getattr(args, "vote_threshold", 3)
    dataset = load_dataset(args.dataset, vote_threshold=threshold, agents=profiles)
    if profiles:
        dataset = with_profiles(dataset, profiles)
    return dataset, profiles


def _cmd_validate(args) -> int:
    try:
        dataset, _ = _load(args)
    except (OSError, DatasetError) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return 1
    stats = dataset_stats(dataset)
    parts = [f"{split}={stats.by_split.get(split, 0)}" for split in ("train", "test")]
    parts += [
        f"with-gold-{split}={stats.with_gold.get(split, 0)}" for split in ("train", "test")
    ]
    parts.append(f"total={stats.total}")
    parts.append(f"agents={len(dataset.agents)}")
    print(" ".join(parts))
    if args.verbose:
        for split in sorted(stats.by_split_domain):
            for domain in sorted(stats.by_split_domain[split]):
                print(f"{split} {domain} {stats.by_split_domain[split][domain]}")
    return 0


def _train_pairs(dataset, include_no_gold: bool):
    return [
        (ex.query.text, set(ex.gold_agents))
        for ex in dataset.split("train")
        if include_no_gold or ex.gold_agents
    ]


def _cmd_train_router(args) -> int:
    try:
        dataset, _ = _load(args)
    except (OSError, DatasetError) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return 1
    pairs = _train_pairs(dataset, args.include_no_gold)
    if not pairs:
        print("no training examples with gold labels", file=sys.stderr)
        return 1
    hp = RouterHyperparams(
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        l2=args.l2,
        seed=args.seed,
        batch_size=args.batch_size,
    )
    model = train_example_router(pairs, dataset.agent_ids(), hp)
    save_router(model, args.out)
    print(f"router trained on {len(pairs)} examples -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    try:
        dataset, _ = _load(args)
        kind = normalize_strategy_kind(args.strategy)
        scorer = scorer_from_spec(args.scorer, timeout_ms=args.timeout_ms)
    except (OSError, DatasetError, ValueError) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return 1
    router = None
    if kind == "qa_examples":
        if args.router_model:
            router = load_router(args.router_model)
        else:
            pairs = _train_pairs(dataset, include_no_gold=False)
            if not pairs:
                print("no training examples with gold labels", file=sys.stderr)
                return 1
            router = train_example_router(
                pairs, dataset.agent_ids(), RouterHyperparams(seed=args.seed)
            )
    strategy = Strategy(
        kind=kind, scorer=scorer, router_model=router, filter_fallbacks=args.filter_fallbacks
    )
    report = evaluate.run_eval(
        strategy, dataset, split=args.split, include_no_gold=args.include_no_gold
    )
    print(report.to_table())
    if args.out:
        evaluate.emit_report(report, args.out, format="records")
        print(f"report written to {args.out}")
    return 0


def _registry_from(args, config: GatewayConfig) -> Registry:
    registry = Registry()
    agents_path = args.agents or config.agents_path
    dataset_path = args.dataset or config.dataset_path
    profiles = load_agents(agents_path) if agents_path else None
    if dataset_path:
        dataset = load_dataset(
            dataset_path, vote_threshold=config.vote_threshold, agents=profiles
        )
        if profiles:
            dataset = with_profiles(dataset, profiles)
        for agent in build_fleet(dataset):
            registry.register(agent.profile, agent)
    elif profiles:
        for p in profiles:
            registry.register(p)
    else:
        raise DatasetError("serve needs --agents or --dataset (or config equivalents)")
    return registry


def _cmd_serve(args) -> int:
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 1
    for attr, key in (
        ("port", "port"), ("host", "host"), ("scorer", "scorer"),
        ("timeout_ms", "timeout_ms"), ("ui_dir", "ui_dir"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(config, key, value)
    try:
        registry = _registry_from(args, config)
    except (OSError, DatasetError) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return 1
    router = None
    model_path = args.router_model or config.router_model_path
    if model_path:
        router = load_router(model_path)
    print(f"gateway on http://{config.host}:{config.port} with {len(registry)} agents")
    serve(config, registry, router)
    return 0


def _cmd_fleet(args) -> int:
    try:
        dataset, _ = _load(args)
    except (OSError, DatasetError) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return 1
    if args.latency_range:
        lo, _, hi = args.latency_range.partition(",")
        latency = LatencySpec(uniform_ms=(float(lo), float(hi)), seed=args.seed)
    else:
        latency = LatencySpec(fixed_ms=args.latency_ms)
    agents = build_fleet(dataset, latency=latency)
    print(f"fleet of {len(agents)} agents on http://{args.host}:{args.port}/<agent-id>")
    serve_fleet(agents, host=args.host, port=args.port)
    return 0


def _cmd_score_debug(args) -> int:
    try:
        if args.docs:
            docs = []
            for line in Path(args.docs).read_text(encoding="utf-8").splitlines():
                if line.strip():
                    rec = json.loads(line)
                    docs.append((str(rec["id"]), str(rec["text"])))
        else:
            if not args.agents and not args.dataset:
                print("score-debug needs --docs, --agents or --dataset", file=sys.stderr)
                return 1
            dataset, profiles = _load(args) if args.dataset else (None, load_agents(args.agents))
            source = dataset.agents if dataset else profiles
            docs = [(p.id, p.description) for p in source]
        index = build_index(docs)
    except (OSError, DatasetError, ValueError, KeyError) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return 1
    for row in term_statistics(index, args.query):
        print(json.dumps(row))
    for doc_id, _ in docs:
        print(json.dumps({"doc": doc_id, "score": bm25_score(index, args.query, doc_id)}))
    return 0


def _cmd_synth(args) -> int:
    dataset = synth.make_replica(seed=args.seed)
    save_dataset(dataset, args.out)
    if args.agents_out:
        save_agents(dataset.agents, args.agents_out)
    stats = dataset_stats(dataset)
    print(
        f"wrote {stats.total} examples ({stats.by_split.get('train', 0)} train, "
        f"{stats.by_split.get('test', 0)} test) to {args.out}"
    )
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "train-router": _cmd_train_router,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "fleet": _cmd_fleet,
    "score-debug": _cmd_score_debug,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("validate", "train-router", "eval", "fleet") and not args.dataset:
        parser.error(f"{args.command} requires --dataset")
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
