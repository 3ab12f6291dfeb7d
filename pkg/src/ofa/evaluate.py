"""Evaluation harness: precision@1, selection shares, per-domain accuracy, baselines.

Evaluation runs over the examples of one split that have at least one gold
response (a flag widens it to all examples, where an unanswerable query always
counts as wrong).  The default path is offline replay (responses come straight
from the dataset, no network) so runs are deterministic; a wire path through a
live gateway exists for end-to-end checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from ofa.arbiter import ScorerHandle, score_candidates, select_best
from ofa.gateway import Strategy
from ofa.model import Dataset, LabeledExample
from ofa.routing import route_by_description, route_by_examples, skills_for

NONE_KEY = "(none)"

ExampleScorer = Callable[[LabeledExample, Sequence[tuple[str, str]]], Sequence[float]]
"""In-process scorer stub: (example, candidates) -> one score per candidate."""


@dataclass(frozen=True)
class EvalReport:
    strategy_label: str
    n_agents: int
    n_evaluated: int
    overall_precision_at_1: float
    per_agent_selection_share: dict[str, float]
    per_domain_accuracy: dict[str, float]
    individual_agent_baselines: dict[str, float]

    def to_records(self) -> list[dict]:
        rows: list[dict] = [
            {"strategy": self.strategy_label, "metric": "n_agents", "key": "", "value": self.n_agents},
            {"strategy": self.strategy_label, "metric": "n_evaluated", "key": "", "value": self.n_evaluated},
            {
                "strategy": self.strategy_label,
                "metric": "overall_precision_at_1",
                "key": "",
                "value": self.overall_precision_at_1,
            },
        ]
        for name, mapping in (
            ("selection_share", self.per_agent_selection_share),
            ("domain_accuracy", self.per_domain_accuracy),
            ("baseline", self.individual_agent_baselines),
        ):
            for key in sorted(mapping):
                rows.append(
                    {"strategy": self.strategy_label, "metric": name, "key": key, "value": mapping[key]}
                )
        return rows

    def to_table(self) -> str:
        # Method row + accuracy + one selection-share breakdown column per agent.
        agents = sorted(self.individual_agent_baselines)
        label_w = max(24, len(self.strategy_label) + 2)
        col_w = max([9] + [len(a) + 2 for a in agents])
        acc = f"{100.0 * self.overall_precision_at_1:.2f}" if self.n_evaluated else ""
        header = f"{'Method':<{label_w}}{f'Accuracy (n={self.n_agents})':>18}" + "".join(
            f"{a:>{col_w}}" for a in agents
        )
        shares = "".join(
            f"{100.0 * self.per_agent_selection_share.get(a, 0.0):>{col_w}.2f}" for a in agents
        )
        baselines = "".join(
            f"{100.0 * self.individual_agent_baselines[a]:>{col_w}.2f}" for a in agents
        )
        lines = [
            header,
            f"{self.strategy_label:<{label_w}}{acc:>18}" + shares,
            f"{'individual baselines':<{label_w}}{'':>18}" + baselines,
            f"Evaluated examples: {self.n_evaluated}",
            "",
            "Per-domain precision@1 (%):",
        ]
        for domain in sorted(self.per_domain_accuracy):
            lines.append(f"  {domain:<24} {100.0 * self.per_domain_accuracy[domain]:6.2f}")
        return "\n".join(lines) + "\n"


def precision_at_1(
    selections: Sequence[tuple[str, str | None]],
    gold: Mapping[str, frozenset[str] | set[str]],
) -> float:
    """Fraction of selections landing in the gold set; none counts as wrong."""
    if not selections:
        return 0.0
    correct = 0
    for query_id, selected in selections:
        if query_id not in gold:
            raise KeyError(f"no gold entry for query {query_id!r}")
        if selected is not None and selected in gold[query_id]:
            correct += 1
    return correct / len(selections)


def individual_agent_baseline(examples: Sequence[LabeledExample], agent_id: str) -> float:
    """Precision@1 of the constant policy 'always use this agent'."""
    known = {a for ex in examples for a in ex.responses}
    if agent_id not in known:
        raise KeyError(f"unknown agent {agent_id!r}")
    if not examples:
        return 0.0
    return sum(1 for ex in examples if agent_id in ex.gold_agents) / len(examples)


def per_domain_breakdown(
    selections: Sequence[tuple[str, str | None]],
    gold: Mapping[str, frozenset[str] | set[str]],
    domains: Mapping[str, str],
) -> dict[str, float]:
    """Precision@1 restricted to each domain's evaluated examples."""
    by_domain: dict[str, list[tuple[str, str | None]]] = {}
    for query_id, selected in selections:
        by_domain.setdefault(domains[query_id], []).append((query_id, selected))
    return {d: precision_at_1(rows, gold) for d, rows in by_domain.items()}


def eval_examples(
    dataset: Dataset,
    split: str = "test",
    include_no_gold: bool = False,
) -> list[LabeledExample]:
    examples = dataset.split(split)
    if include_no_gold:
        return examples
    return [ex for ex in examples if ex.gold_agents]


def candidate_pairs(ex: LabeledExample, filter_fallbacks: bool) -> list[tuple[str, str]]:
    return [
        (agent_id, rec.text)
        for agent_id, rec in ex.responses.items()
        if rec.status == "answered" or (rec.status == "fallback" and not filter_fallbacks)
    ]


def _select_offline(
    strategy: Strategy,
    dataset: Dataset,
    ex: LabeledExample,
    scorer_fn: ExampleScorer | None,
) -> str | None:
    if strategy.kind == "qr":
        pairs = candidate_pairs(ex, strategy.filter_fallbacks)
        if scorer_fn is not None:
            scores = list(scorer_fn(ex, pairs))
            if len(scores) != len(pairs):
                raise ValueError("scorer stub returned wrong number of scores")
            scored = [(agent, float(s)) for (agent, _), s in zip(pairs, scores)]
        else:
            scored = score_candidates(strategy.scorer, ex.query.text, pairs)
        return select_best(scored).selected_agent
    if strategy.kind == "qa_examples":
        return route_by_examples(strategy.router_model, ex.query.text)[0][0]
    from ofa.gateway import _sentence_scorer_for  # local import avoids a cycle

    ranking = route_by_description(
        ex.query.text,
        skills_for(dataset.agents),
        _sentence_scorer_for(strategy.scorer),
        split=strategy.split_descriptions,
    )
    return ranking[0][0]


def run_eval(
    strategy: Strategy,
    dataset: Dataset,
    label: str | None = None,
    split: str = "test",
    include_no_gold: bool = False,
    scorer_fn: ExampleScorer | None = None,
    ask_fn: Callable[[str], object] | None = None,
) -> EvalReport:
    """Execute the strategy on every evaluated example and aggregate the report.

    ``scorer_fn`` swaps in an in-process scoring stub for the qr strategy
    (oracle/constant tests).  ``ask_fn`` switches to the wire path: it gets the
    query text and must return an object with a ``selected_agent`` attribute.
    """
    examples = eval_examples(dataset, split=split, include_no_gold=include_no_gold)
    selections: list[tuple[str, str | None]] = []
    for ex in examples:
        if ask_fn is not None:
            result = ask_fn(ex.query.text)
            selected = result.selected_agent
        else:
            selected = _select_offline(strategy, dataset, ex, scorer_fn)
        selections.append((ex.query.id, selected))

    gold = {ex.query.id: ex.gold_agents for ex in examples}
    domains = {ex.query.id: ex.query.domain for ex in examples}
    n = len(examples)

    share: dict[str, float] = {}
    if n:
        counts: dict[str, int] = {}
        for _, selected in selections:
            key = selected if selected is not None else NONE_KEY
            counts[key] = counts.get(key, 0) + 1
        share = {k: c / n for k, c in counts.items()}

    baselines = {
        a.id: individual_agent_baseline(examples, a.id) if n else 0.0
        for a in dataset.agents
    }

    return EvalReport(
        strategy_label=label or _default_label(strategy, scorer_fn),
        n_agents=len(dataset.agents),
        n_evaluated=n,
        overall_precision_at_1=precision_at_1(selections, gold) if n else 0.0,
        per_agent_selection_share=share,
        per_domain_accuracy=per_domain_breakdown(selections, gold, domains),
        individual_agent_baselines=baselines,
    )


def _default_label(strategy: Strategy, scorer_fn: ExampleScorer | None) -> str:
    if scorer_fn is not None:
        return f"{strategy.kind}/stub"
    if strategy.kind == "qa_examples":
        return "qa_examples/router"
    return f"{strategy.kind}/{strategy.scorer.kind}"


def oracle_scorer(ex: LabeledExample, pairs: Sequence[tuple[str, str]]) -> list[float]:
    """Upper-bound stub: gold responses score 1, everything else 0."""
    return [1.0 if agent in ex.gold_agents else 0.0 for agent, _ in pairs]


def constant_scorer(value: float = 0.5) -> ExampleScorer:
    """All candidates tie at a constant; selection falls to the id tie-break."""

    def score(ex: LabeledExample, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [value] * len(pairs)

    return score


def emit_report(report: EvalReport, path: str | Path, format: str = "records") -> None:
    path = Path(path)
    if format == "records":
        with path.open("w", encoding="utf-8") as fh:
            for row in report.to_records():
                fh.write(json.dumps(row) + "\n")
    elif format == "table":
        path.write_text(report.to_table(), encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {format!r}")


def read_report(path: str | Path) -> EvalReport:
    """Load a records-format report; round-trips emit_report exactly."""
    rows = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not rows:
        raise ValueError("empty report file")
    label = rows[0]["strategy"]
    scalars: dict[str, float] = {}
    maps: dict[str, dict[str, float]] = {"selection_share": {}, "domain_accuracy": {}, "baseline": {}}
    for row in rows:
        if row["metric"] in maps:
            maps[row["metric"]][row["key"]] = row["value"]
        else:
            scalars[row["metric"]] = row["value"]
    return EvalReport(
        strategy_label=label,
        n_agents=int(scalars["n_agents"]),
        n_evaluated=int(scalars["n_evaluated"]),
        overall_precision_at_1=float(scalars["overall_precision_at_1"]),
        per_agent_selection_share=maps["selection_share"],
        per_domain_accuracy=maps["domain_accuracy"],
        individual_agent_baselines=maps["baseline"],
    )
