"""Deterministic synthetic datasets.

``make_replica`` builds a full-scale stand-in for the published corpus with its
exact headline statistics: 5550 utterances over 37 domains (100 per domain in
train, 50 in test), 19 agents answering every utterance, 2399/1186 train/test
examples with at least one gold response, the big-four gold-membership rates,
and a controlled share of evaluated examples whose gold response dominates
lexically (which is what a lexical response scorer can get right).

``make_separable_corpus`` builds the three-agent disjoint-vocabulary routing
fixture used by the routing tests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ofa.model import (
    AgentProfile,
    Dataset,
    LabeledExample,
    Query,
    ResponseRecord,
    response_status,
    DEFAULT_FALLBACK_PHRASES,
)
from ofa.routing import split_description

DOMAINS = (
    "weather", "directions", "auto", "restaurant-suggestion", "travel-suggestion",
    "time", "flight-info", "date", "alarms", "news", "sports", "stocks", "banking",
    "recipes", "dictionary", "tasks", "hotels", "math", "wikipedia", "mobile-account",
    "coffee", "events", "jokes", "reminders", "covid-19", "music", "shopping",
    "movies", "fitness", "translation", "calendar", "email", "geography", "history",
    "science", "trivia", "phone-calls",
)

BIG_FOUR = ("alexa", "google", "houndify", "adasa")

SMALL_AGENTS = {
    "recipe": ("recipes",),
    "dictionary": ("dictionary",),
    "task-manager": ("tasks",),
    "hotel": ("hotels",),
    "stock": ("stocks",),
    "math": ("math",),
    "sports": ("sports",),
    "wikipedia": ("wikipedia", "history", "geography", "science", "trivia"),
    "mobile-account": ("mobile-account", "phone-calls"),
    "banking": ("banking",),
    "coffee-shop": ("coffee",),
    "event-search": ("events",),
    "jokes": ("jokes",),
    "reminders": ("reminders", "alarms", "calendar"),
    "covid-19": ("covid-19",),
}

AGENTS = BIG_FOUR + tuple(SMALL_AGENTS)

FILLERS = (
    "what", "is", "the", "my", "me", "to", "for", "in", "a", "how",
    "can", "you", "please", "today", "now", "tell", "about",
)

# Test-split gold-membership counts for the big four over the 1186 evaluated
# examples, and the share of evaluated examples a lexical scorer can resolve.
TEST_BASELINE_COUNTS = {"google": 570, "alexa": 523, "houndify": 380, "adasa": 41}
TRAIN_BASELINE_COUNTS = {"google": 1153, "alexa": 1058, "houndify": 769, "adasa": 83}
WITH_GOLD = {"train": 2399, "test": 1186}
PER_DOMAIN = {"train": 100, "test": 50}
LEXICAL_WINNER_RATE = 0.5994

_SYLLABLES = (
    "ba", "ce", "di", "fo", "gu", "ha", "ki", "lo", "mu", "na",
    "pe", "qua", "ri", "so", "tu", "ve", "wi", "xo", "ya", "zu",
)


def _pseudo_word(rng: random.Random, taken: set[str]) -> str:
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3)))
        if word not in taken and word not in FILLERS:
            taken.add(word)
            return word


def _domain_vocab(rng: random.Random) -> dict[str, list[str]]:
    taken: set[str] = set()
    vocab: dict[str, list[str]] = {}
    for domain in DOMAINS:
        head = domain.replace("-", " ").split()[0]
        taken.add(head)
        vocab[domain] = [head] + [_pseudo_word(rng, taken) for _ in range(17)]
    return vocab


def _largest_remainder(weights: list[float], total: int, caps: list[int]) -> list[int]:
    """Integer allocation proportional to weights, capped, summing to total."""
    s = sum(weights)
    if s <= 0:
        weights = [1.0] * len(weights)
        s = float(len(weights))
    raw = [total * w / s for w in weights]
    alloc = [min(int(r), c) for r, c in zip(raw, caps)]
    remainder = total - sum(alloc)
    order = sorted(
        range(len(raw)),
        key=lambda i: (-(raw[i] - int(raw[i])), i),
    )
    idx = 0
    while remainder > 0:
        i = order[idx % len(order)]
        if alloc[i] < caps[i]:
            alloc[i] += 1
            remainder -= 1
        idx += 1
        if idx > 10 * len(order) * (total + 1):
            raise ValueError("allocation does not fit under caps")
    return alloc


@dataclass
class _Slot:
    domain: str
    split: str
    index: int
    with_gold: bool
    gold: set[str]
    winner: str = ""
    winner_gold: bool = False


def _affinities(rng: random.Random) -> dict[str, dict[str, float]]:
    aff: dict[str, dict[str, float]] = {}
    aff["google"] = {d: rng.uniform(0.5, 1.0) for d in DOMAINS}
    aff["alexa"] = {d: rng.uniform(0.45, 0.95) for d in DOMAINS}
    aff["houndify"] = {d: rng.uniform(0.25, 0.8) for d in DOMAINS}
    aff["adasa"] = {d: (1.0 if d == "auto" else 0.015) for d in DOMAINS}
    for agent, homes in SMALL_AGENTS.items():
        aff[agent] = {d: (1.0 if d in homes else 0.0) for d in DOMAINS}
    return aff


def _plan_split(
    split: str,
    rng: random.Random,
    affinities: dict[str, dict[str, float]],
) -> list[_Slot]:
    per_domain = PER_DOMAIN[split]
    with_gold_total = WITH_GOLD[split]

    base, extra = divmod(with_gold_total, len(DOMAINS))
    quota = {d: base + (1 if i < extra else 0) for i, d in enumerate(DOMAINS)}

    slots: list[_Slot] = []
    by_domain: dict[str, list[_Slot]] = {}
    for domain in DOMAINS:
        flags = [True] * quota[domain] + [False] * (per_domain - quota[domain])
        rng.shuffle(flags)
        rows = [
            _Slot(domain=domain, split=split, index=i, with_gold=flag, gold=set())
            for i, flag in enumerate(flags)
        ]
        slots.extend(rows)
        by_domain[domain] = [r for r in rows if r.with_gold]

    counts = TRAIN_BASELINE_COUNTS if split == "train" else TEST_BASELINE_COUNTS
    for agent in BIG_FOUR:
        weights = [affinities[agent][d] * len(by_domain[d]) for d in DOMAINS]
        caps = [len(by_domain[d]) for d in DOMAINS]
        alloc = _largest_remainder(weights, counts[agent], caps)
        for domain, take in zip(DOMAINS, alloc):
            for slot in rng.sample(by_domain[domain], take):
                slot.gold.add(agent)

    for agent, homes in SMALL_AGENTS.items():
        for domain in homes:
            for slot in by_domain[domain]:
                if rng.random() < 0.5:
                    slot.gold.add(agent)

    anchors = {d: list(SMALL_AGENTS)[i % len(SMALL_AGENTS)] for i, d in enumerate(DOMAINS)}
    for domain in DOMAINS:
        for slot in by_domain[domain]:
            if not slot.gold:
                slot.gold.add(anchors[domain])

    evaluated = [s for s in slots if s.with_gold]
    winners_gold = round(LEXICAL_WINNER_RATE * len(evaluated))
    lucky = set(
        id(s) for s in rng.sample(evaluated, winners_gold)
    )
    for slot in slots:
        if not slot.with_gold:
            slot.winner = rng.choice(AGENTS)
            continue
        slot.winner_gold = id(slot) in lucky
        if slot.winner_gold:
            slot.winner = rng.choice(sorted(slot.gold))
        else:
            non_gold = sorted(set(AGENTS) - slot.gold)
            slot.winner = rng.choice(non_gold)
    return slots


def _response_text(
    rng: random.Random,
    agent: str,
    slot: _Slot,
    qwords: list[str],
    vocab: dict[str, list[str]],
    affinities: dict[str, dict[str, float]],
) -> str:
    domain_words = vocab[slot.domain]
    if agent == slot.winner:
        echo = rng.sample(qwords, min(3, len(qwords)))
        extra = rng.sample(domain_words, 2)
        return "here is " + " ".join(echo + extra)
    if agent in slot.gold:
        echo = [rng.choice(qwords)]
        extra = rng.sample(domain_words, 2)
        return "sure the " + " ".join(echo + extra) + " is ready"
    # Non-gold, non-winner: fall back or answer off the mark.
    affinity = affinities[agent][slot.domain]
    if agent == "adasa" and slot.domain != "auto":
        if rng.random() < 0.9:
            return "Out of scope!"
    if affinity < 0.2 and rng.random() < 0.85:
        return rng.choice(DEFAULT_FALLBACK_PHRASES)
    if rng.random() < 0.2:
        return rng.choice(DEFAULT_FALLBACK_PHRASES)
    other = rng.choice([d for d in DOMAINS if d != slot.domain])
    words = rng.sample(vocab[other], 3)
    if rng.random() < 0.3:
        words = [rng.choice(qwords)] + words[:2]
    return "i found something about " + " ".join(words)


def _descriptions(
    rng: random.Random,
    vocab: dict[str, list[str]],
    affinities: dict[str, dict[str, float]],
) -> dict[str, str]:
    out: dict[str, str] = {}
    for agent in AGENTS:
        strong = sorted(DOMAINS, key=lambda d: -affinities[agent][d])[:6]
        if agent in SMALL_AGENTS:
            strong = list(SMALL_AGENTS[agent])
        sentences = []
        for domain in strong[:4]:
            words = rng.sample(vocab[domain], 4)
            sentences.append(
                f"Handles {domain.replace('-', ' ')} requests such as {words[0]}, {words[1]} and {words[2]}."
            )
        sentences.append("Ask it anything it covers and it answers right away.")
        out[agent] = " ".join(sentences)
    return out


def make_replica(seed: int = 7, vote_threshold: int = 3) -> Dataset:
    """Full-size synthetic corpus matching the published headline statistics."""
    rng = random.Random(seed)
    vocab = _domain_vocab(rng)
    affinities = _affinities(rng)
    descriptions = _descriptions(rng, vocab, affinities)

    examples: list[LabeledExample] = []
    for split in ("train", "test"):
        slots = _plan_split(split, rng, affinities)
        for slot in slots:
            qwords = rng.sample(vocab[slot.domain], rng.randint(3, 5))
            fillers = rng.sample(FILLERS, rng.randint(2, 4))
            words = qwords + fillers
            rng.shuffle(words)
            text = " ".join(words)
            responses: dict[str, ResponseRecord] = {}
            for agent in AGENTS:
                rtext = _response_text(rng, agent, slot, qwords, vocab, affinities)
                status = response_status(rtext, DEFAULT_FALLBACK_PHRASES)
                if agent in slot.gold:
                    votes = rng.randint(3, 5)
                else:
                    votes = rng.randint(0, 2)
                responses[agent] = ResponseRecord(text=rtext, votes=votes, status=status)
            query = Query(
                id=f"{split}-{slot.domain}-{slot.index:03d}",
                text=text,
                domain=slot.domain,
                split=split,
            )
            examples.append(
                LabeledExample(query=query, responses=responses, gold_agents=frozenset(slot.gold))
            )

    profiles = tuple(
        AgentProfile(
            id=agent,
            display_name=agent.replace("-", " ").title(),
            description=descriptions[agent],
            skill_sentences=tuple(split_description(descriptions[agent])),
        )
        for agent in AGENTS
    )
    return Dataset(examples=tuple(examples), agents=profiles, vote_threshold=vote_threshold)


WEATHER_WORDS = (
    "rain", "snow", "forecast", "sunny", "storm", "temperature",
    "cloudy", "windy", "humid", "cold",
)
BANK_WORDS = (
    "balance", "deposit", "loan", "account", "credit", "transfer",
    "savings", "mortgage", "interest", "withdraw",
)
MUSIC_WORDS = (
    "song", "playlist", "album", "guitar", "melody", "band",
    "concert", "lyrics", "tune", "piano",
)

SEPARABLE_VOCAB = {
    "weatherbot": WEATHER_WORDS,
    "bankbot": BANK_WORDS,
    "musicbot": MUSIC_WORDS,
}


def _separable_query(rng: random.Random, words: tuple[str, ...]) -> str:
    content = rng.sample(list(words), rng.randint(3, 5))
    fillers = rng.sample(FILLERS, rng.randint(1, 3))
    mixed = content + fillers
    rng.shuffle(mixed)
    return " ".join(mixed)


def make_separable_corpus(
    n_train_per_agent: int = 30,
    n_test_per_agent: int = 10,
    seed: int = 11,
) -> tuple[list[tuple[str, set[str]]], list[tuple[str, set[str]]], list[AgentProfile]]:
    """Three agents with disjoint vocabularies: train pairs, test pairs, profiles."""
    rng = random.Random(seed)
    train: list[tuple[str, set[str]]] = []
    test: list[tuple[str, set[str]]] = []
    profiles: list[AgentProfile] = []
    for agent, words in SEPARABLE_VOCAB.items():
        for _ in range(n_train_per_agent):
            train.append((_separable_query(rng, words), {agent}))
        for _ in range(n_test_per_agent):
            test.append((_separable_query(rng, words), {agent}))
        description = (
            f"Covers {words[0]}, {words[1]}, {words[2]} and {words[3]}. "
            f"Also knows {words[4]}, {words[5]}, {words[6]} and {words[7]}. "
            f"Handles {words[8]} and {words[9]} requests."
        )
        profiles.append(
            AgentProfile(
                id=agent,
                display_name=agent,
                description=description,
                skill_sentences=tuple(split_description(description)),
            )
        )
    rng.shuffle(train)
    rng.shuffle(test)
    return train, test, profiles
