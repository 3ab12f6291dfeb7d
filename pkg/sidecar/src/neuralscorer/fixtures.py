"""Deterministic toy fixtures for training and verification runs."""

from __future__ import annotations

import random

from neuralscorer.train import TrainExample, prepare_examples

FALLBACKS = (
    "weather information is currently unavailable",
    "didn't get that",
    "sorry i can't help with that",
    "out of scope",
)

_TOPICS = {
    "weather": ["rain", "snow", "sunny", "storm", "cloudy", "windy"],
    "bank": ["balance", "deposit", "loan", "credit", "savings", "transfer"],
    "music": ["song", "album", "playlist", "guitar", "piano", "band"],
    "travel": ["flight", "hotel", "ticket", "train", "beach", "trip"],
    "food": ["pizza", "sushi", "burger", "pasta", "salad", "soup"],
}

CITIES = [
    "alhambra", "fresno", "toledo", "madrid", "oslo", "quito",
    "dakar", "perth", "tunis", "hanoi", "leeds", "salem",
    "bergen", "davao", "kyoto", "quebec",
]
DAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]
CONDITIONS = ["sunny", "rainy", "windy", "snowy", "cloudy", "mild"]


def make_overfit_fixture(n_queries: int = 50, seed: int = 13) -> list[TrainExample]:
    """Queries whose gold response echoes the query topic; 3 negatives each."""
    rng = random.Random(seed)
    topics = list(_TOPICS)
    raw = []
    for i in range(n_queries):
        topic = topics[i % len(topics)]
        words = rng.sample(_TOPICS[topic], 3)
        query = f"what about {words[0]} and {words[1]} {words[2]}"
        gold = f"here is the {words[0]} {words[1]} answer you wanted"
        other = rng.choice([t for t in topics if t != topic])
        negatives = [
            rng.choice(FALLBACKS),
            "i found something about " + " ".join(rng.sample(_TOPICS[other], 2)),
            "let me think about " + rng.choice(_TOPICS[other]),
        ]
        raw.append((query, [gold], negatives))
    examples, skipped = prepare_examples(raw)
    assert skipped == 0
    return examples


def make_fallback_fixture(
    n_train: int = 70, n_heldout: int = 42, seed: int = 29
) -> tuple[list[TrainExample], list[tuple[str, str, str]]]:
    """Templated weather queries: informative gold vs fallback negatives.

    Held-out pairs reuse the training vocabulary but only (city, day)
    combinations never seen in training.  Returns (train examples,
    held-out (query, gold, fallback) triples).
    """
    rng = random.Random(seed)
    combos = [(c, d) for c in CITIES for d in DAYS]
    rng.shuffle(combos)
    train_combos = combos[:n_train]
    heldout_combos = combos[n_train : n_train + n_heldout]

    def query_of(city: str, day: str) -> str:
        return f"what is the weather in {city} on {day}"

    def gold_of(city: str, day: str) -> str:
        cond = CONDITIONS[(len(city) + len(day)) % len(CONDITIONS)]
        return f"expect {cond} weather in {city} on {day}"

    def fallback_of(city: str, day: str) -> str:
        # Echoes the query heavily: lexically closer than the gold answer,
        # yet resolves nothing.  Scoring has to learn that, not count overlap.
        return f"the weather in {city} on {day} is currently unavailable"

    raw = []
    for city, day in train_combos:
        negatives = [fallback_of(city, day), rng.choice(FALLBACKS)]
        raw.append((query_of(city, day), [gold_of(city, day)], negatives))
    examples, skipped = prepare_examples(raw)
    assert skipped == 0

    heldout = [
        (query_of(city, day), gold_of(city, day), fallback_of(city, day))
        for city, day in heldout_combos
    ]
    return examples, heldout


def fixture_texts(examples: list[TrainExample]) -> list[str]:
    texts = []
    for ex in examples:
        texts.append(ex.query)
        texts.extend(ex.gold)
        texts.extend(ex.negatives)
    texts.extend(FALLBACKS)
    return texts
