"""Domain types, dataset ingestion and gold-label derivation.

The dataset file is UTF-8 JSONL, one example per line:

    {"id": "...", "text": "...", "domain": "...", "split": "train"|"test",
     "responses": [{"agent": "...", "text": "...", "votes": 0-5}, ...]}

A record may carry an explicit ``"gold": [agent, ...]`` list instead of (or in
addition to) per-response votes; an explicit gold list wins.  Agent profiles
live in a separate JSONL file: ``{"id", "name", "description", "endpoint"}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

SPLITS = ("train", "test")

# Non-answers agents emit when they cannot resolve a query.  Exact-match,
# extendable per dataset via the fallback_phrases argument.
DEFAULT_FALLBACK_PHRASES = (
    "Didn't get that!",
    "Out of scope!",
    "Sorry, I don't know that one.",
    "Sorry, I can't help with that.",
)

MAX_VOTES = 5
DEFAULT_VOTE_THRESHOLD = 3


class DatasetError(ValueError):
    """Malformed dataset or agent file; message carries the offending line."""


_ID_JUNK = re.compile(r"[^a-z0-9-]+")
_ID_SEPS = re.compile(r"[\s_]+")


def normalize_agent_id(raw: str) -> str:
    """Lowercase ASCII with hyphens; stable tie-breaking key."""
    s = _ID_SEPS.sub("-", raw.strip().lower())
    s = _ID_JUNK.sub("", s)
    return s.strip("-")


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    domain: str
    split: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise DatasetError(f"query {self.id!r}: empty text")
        if self.split not in SPLITS:
            raise DatasetError(f"query {self.id!r}: bad split {self.split!r}")


@dataclass(frozen=True)
class AgentProfile:
    id: str
    display_name: str = ""
    description: str = ""
    skill_sentences: tuple[str, ...] = ()
    endpoint: str | None = None


@dataclass(frozen=True)
class AgentResponse:
    """One agent's answer to one dispatched query."""

    agent_id: str
    text: str
    status: str  # answered | fallback | timeout | error
    latency_ms: int = 0

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be non-negative")
        if self.status == "timeout" and self.text:
            raise ValueError("timeout responses carry no text")
        if self.status == "answered" and not self.text:
            raise ValueError("answered responses carry text")


@dataclass(frozen=True)
class ResponseRecord:
    """A recorded (dataset) response: text plus crowd votes, if published."""

    text: str
    votes: int | None
    status: str  # answered | fallback


@dataclass(frozen=True)
class LabeledExample:
    query: Query
    responses: Mapping[str, ResponseRecord]
    gold_agents: frozenset[str]

    def __post_init__(self) -> None:
        missing = self.gold_agents - set(self.responses)
        if missing:
            raise DatasetError(
                f"query {self.query.id!r}: gold agents {sorted(missing)} have no response"
            )


@dataclass(frozen=True)
class Dataset:
    examples: tuple[LabeledExample, ...]
    agents: tuple[AgentProfile, ...]
    vote_threshold: int = DEFAULT_VOTE_THRESHOLD

    def agent_ids(self) -> list[str]:
        return [a.id for a in self.agents]

    def split(self, name: str) -> list[LabeledExample]:
        return [ex for ex in self.examples if ex.query.split == name]


def derive_gold(votes: Mapping[str, int], threshold: int) -> set[str]:
    """Agents whose vote count reaches the threshold."""
    for agent, v in votes.items():
        if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v <= MAX_VOTES:
            raise DatasetError(f"agent {agent!r}: vote {v!r} outside 0..{MAX_VOTES}")
    return {a for a, v in votes.items() if v >= threshold}


def response_status(text: str, fallback_phrases: Iterable[str]) -> str:
    if not text.strip() or text in set(fallback_phrases):
        return "fallback"
    return "answered"


def _parse_example(
    record: dict,
    line_no: int,
    vote_threshold: int,
    fallback_phrases: Iterable[str],
) -> LabeledExample:
    try:
        query = Query(
            id=str(record["id"]),
            text=str(record["text"]),
            domain=str(record["domain"]),
            split=str(record["split"]),
        )
        raw_responses = record["responses"]
    except KeyError as exc:
        raise DatasetError(f"line {line_no}: missing field {exc}") from None

    responses: dict[str, ResponseRecord] = {}
    votes: dict[str, int] = {}
    votes_missing = False
    for r in raw_responses:
        try:
            agent = normalize_agent_id(str(r["agent"]))
            text = str(r["text"])
        except KeyError as exc:
            raise DatasetError(f"line {line_no}: response missing field {exc}") from None
        if not agent:
            raise DatasetError(f"line {line_no}: blank agent id")
        if agent in responses:
            raise DatasetError(f"line {line_no}: duplicate response for agent {agent!r}")
        v = r.get("votes")
        if v is None:
            votes_missing = True
        else:
            if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v <= MAX_VOTES:
                raise DatasetError(f"line {line_no}: agent {agent!r} vote {v!r} outside 0..{MAX_VOTES}")
            votes[agent] = v
        responses[agent] = ResponseRecord(
            text=text, votes=v, status=response_status(text, fallback_phrases)
        )

    if "gold" in record:
        gold = frozenset(normalize_agent_id(str(a)) for a in record["gold"])
        unknown = gold - set(responses)
        if unknown:
            raise DatasetError(f"line {line_no}: gold agents {sorted(unknown)} have no response")
    elif votes_missing:
        raise DatasetError(f"line {line_no}: responses lack votes and no gold list given")
    else:
        gold = frozenset(derive_gold(votes, vote_threshold))

    return LabeledExample(query=query, responses=responses, gold_agents=gold)


def load_dataset(
    path: str | Path,
    vote_threshold: int = DEFAULT_VOTE_THRESHOLD,
    agents: Iterable[AgentProfile] | None = None,
    fallback_phrases: Iterable[str] = DEFAULT_FALLBACK_PHRASES,
) -> Dataset:
    """Load and validate a JSONL dataset, deriving gold sets.

    When ``agents`` is given, every response must reference a known agent id;
    otherwise minimal profiles are synthesized from the response agent ids, in
    first-seen order.
    """
    path = Path(path)
    fallback_phrases = tuple(fallback_phrases)
    examples: list[LabeledExample] = []
    seen_ids: set[str] = set()
    known: dict[str, AgentProfile] | None = None
    if agents is not None:
        known = {a.id: a for a in agents}

    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {line_no}: bad JSON ({exc.msg})") from None
            if not isinstance(record, dict):
                raise DatasetError(f"line {line_no}: record is not an object")
            try:
                ex = _parse_example(record, line_no, vote_threshold, fallback_phrases)
            except DatasetError:
                raise
            except (TypeError, ValueError) as exc:
                raise DatasetError(f"line {line_no}: {exc}") from None
            if ex.query.id in seen_ids:
                raise DatasetError(f"line {line_no}: duplicate query id {ex.query.id!r}")
            seen_ids.add(ex.query.id)
            if known is not None:
                unknown = set(ex.responses) - set(known)
                if unknown:
                    raise DatasetError(f"line {line_no}: unknown agent id {sorted(unknown)}")
            examples.append(ex)

    if known is not None:
        profiles = tuple(known.values())
    else:
        order: list[str] = []
        for ex in examples:
            for agent_id in ex.responses:
                if agent_id not in order:
                    order.append(agent_id)
        profiles = tuple(AgentProfile(id=a, display_name=a) for a in order)

    return Dataset(examples=tuple(examples), agents=profiles, vote_threshold=vote_threshold)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write the JSONL form back out; load(save(load(x))) == load(x)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in dataset.examples:
            responses = []
            votes_missing = False
            for agent_id, rec in ex.responses.items():
                r: dict = {"agent": agent_id, "text": rec.text}
                if rec.votes is None:
                    votes_missing = True
                else:
                    r["votes"] = rec.votes
                responses.append(r)
            record = {
                "id": ex.query.id,
                "text": ex.query.text,
                "domain": ex.query.domain,
                "split": ex.query.split,
                "responses": responses,
            }
            # Votes alone re-derive gold; only emit it when they cannot.
            if votes_missing:
                record["gold"] = sorted(ex.gold_agents)
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_agents(path: str | Path) -> list[AgentProfile]:
    """Load agent profiles (JSONL), deriving skill sentences from descriptions."""
    from ofa.routing import split_description

    path = Path(path)
    profiles: list[AgentProfile] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {line_no}: bad JSON ({exc.msg})") from None
            try:
                agent_id = normalize_agent_id(str(record["id"]))
            except KeyError:
                raise DatasetError(f"line {line_no}: missing field 'id'") from None
            if not agent_id:
                raise DatasetError(f"line {line_no}: blank agent id")
            if agent_id in seen:
                raise DatasetError(f"line {line_no}: duplicate agent id {agent_id!r}")
            seen.add(agent_id)
            description = str(record.get("description") or "")
            profiles.append(
                AgentProfile(
                    id=agent_id,
                    display_name=str(record.get("name") or agent_id),
                    description=description,
                    skill_sentences=tuple(split_description(description)),
                    endpoint=record.get("endpoint"),
                )
            )
    return profiles


def save_agents(profiles: Iterable[AgentProfile], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for p in profiles:
            fh.write(
                json.dumps(
                    {
                        "id": p.id,
                        "name": p.display_name,
                        "description": p.description,
                        "endpoint": p.endpoint,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def with_profiles(dataset: Dataset, profiles: Iterable[AgentProfile]) -> Dataset:
    """Attach full profiles to a dataset loaded without an agents file."""
    known = {p.id: p for p in profiles}
    referenced: set[str] = set()
    for ex in dataset.examples:
        referenced |= set(ex.responses)
    missing = referenced - set(known)
    if missing:
        raise DatasetError(f"profiles missing for agents {sorted(missing)}")
    return replace(dataset, agents=tuple(known.values()))


@dataclass(frozen=True)
class DatasetStats:
    total: int
    by_split: dict[str, int]
    by_domain: dict[str, int]
    by_split_domain: dict[str, dict[str, int]]
    with_gold: dict[str, int]
    without_gold: dict[str, int]

    @property
    def with_gold_total(self) -> int:
        return sum(self.with_gold.values())

    @property
    def without_gold_total(self) -> int:
        return sum(self.without_gold.values())


def dataset_stats(dataset: Dataset) -> DatasetStats:
    """Counts per split/domain plus with-gold / without-gold tallies."""
    by_split: dict[str, int] = {}
    by_domain: dict[str, int] = {}
    by_split_domain: dict[str, dict[str, int]] = {}
    with_gold: dict[str, int] = {}
    without_gold: dict[str, int] = {}
    for ex in dataset.examples:
        split, domain = ex.query.split, ex.query.domain
        by_split[split] = by_split.get(split, 0) + 1
        by_domain[domain] = by_domain.get(domain, 0) + 1
        by_split_domain.setdefault(split, {})
        by_split_domain[split][domain] = by_split_domain[split].get(domain, 0) + 1
        bucket = with_gold if ex.gold_agents else without_gold
        bucket[split] = bucket.get(split, 0) + 1
    return DatasetStats(
        total=len(dataset.examples),
        by_split=by_split,
        by_domain=by_domain,
        by_split_domain=by_split_domain,
        with_gold=with_gold,
        without_gold=without_gold,
    )
