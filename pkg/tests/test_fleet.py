import logging

import pytest

from ofa.fleet import LatencySpec, ReplayAgent, build_fleet, build_fleet_app, normalize_query
from ofa.model import load_dataset
from tests.conftest import write_jsonl

RECORDS = [
    {
        "id": "q1",
        "text": "At how many miles will I run out of gas",
        "domain": "auto",
        "split": "test",
        "responses": [
            {"agent": "adasa", "text": "With your current fuel economy of 28 MPG, you should be able to cover about 532 miles with the fuel you have.", "votes": 4},
            {"agent": "houndify", "text": "Didn't get that!", "votes": 0},
            {"agent": "google", "text": "some web result about gas", "votes": 1},
        ],
    },
    {
        "id": "q2",
        "text": "Is it gonna be warm Friday in Alhambra?",
        "domain": "weather",
        "split": "test",
        "responses": [
            {"agent": "adasa", "text": "Out of scope!", "votes": 0},
            {"agent": "houndify", "text": "There will be a high of seventy degrees in Alhambra on Friday.", "votes": 3},
            {"agent": "google", "text": "No, it won't be hot Friday in Alhambra, California.", "votes": 3},
        ],
    },
]


@pytest.fixture
def small_dataset(tmp_path):
    path = tmp_path / "d.jsonl"
    write_jsonl(path, RECORDS)
    return load_dataset(path)


def test_build_fleet_replays_recorded_responses(small_dataset):
    fleet = {a.profile.id: a for a in build_fleet(small_dataset)}
    assert len(fleet) == 3

    gas = "At how many miles will I run out of gas"
    adasa = fleet["adasa"].respond(gas)
    assert adasa.status == "answered"
    assert adasa.text.startswith("With your current fuel economy")

    houndify = fleet["houndify"].respond(gas)
    assert houndify.status == "fallback"
    assert houndify.text == "Didn't get that!"


def test_unknown_query_gets_default_fallback(small_dataset):
    fleet = build_fleet(small_dataset, fallback_text="Didn't get that!")
    response = fleet[0].respond("zzz qqq")
    assert response.status == "fallback"
    assert response.text == "Didn't get that!"


def test_lookup_is_normalized(small_dataset):
    fleet = {a.profile.id: a for a in build_fleet(small_dataset)}
    loud = fleet["adasa"].respond("  AT HOW MANY   MILES WILL i RUN OUT OF GAS ")
    assert loud.status == "answered"


def test_replay_determinism(small_dataset):
    agent = build_fleet(small_dataset)[0]
    first = agent.respond("Is it gonna be warm Friday in Alhambra?")
    second = agent.respond("Is it gonna be warm Friday in Alhambra?")
    assert (first.text, first.status) == (second.text, second.status)


def test_collision_keeps_first(tmp_path, caplog):
    records = [
        dict(RECORDS[0], id="a1"),
        dict(RECORDS[0], id="a2"),
    ]
    records[1] = {
        **records[1],
        "responses": [{"agent": "adasa", "text": "different answer", "votes": 1},
                      {"agent": "houndify", "text": "Didn't get that!", "votes": 0},
                      {"agent": "google", "text": "some web result about gas", "votes": 1}],
    }
    path = tmp_path / "d.jsonl"
    write_jsonl(path, records)
    dataset = load_dataset(path)
    with caplog.at_level(logging.WARNING):
        fleet = {a.profile.id: a for a in build_fleet(dataset)}
    assert "colliding" in caplog.text
    response = fleet["adasa"].respond(RECORDS[0]["text"])
    assert response.text.startswith("With your current fuel economy")


def test_latency_fixed_and_uniform_determinism():
    spec = LatencySpec(uniform_ms=(10, 20), seed=42)
    first = spec.for_request("adasa", normalize_query("hello there"))
    second = spec.for_request("adasa", normalize_query("hello   THERE"))
    assert first == second
    assert 10 <= first <= 20
    other_agent = spec.for_request("google", normalize_query("hello there"))
    other_seed = LatencySpec(uniform_ms=(10, 20), seed=43).for_request("adasa", "hello there")
    assert {first} != {other_agent, other_seed}

    per_agent = LatencySpec(per_agent_ms={"adasa": 50})
    assert per_agent.for_request("adasa", "x") == 50
    assert per_agent.for_request("google", "x") == 0.0


def test_injected_latency_is_slept(small_dataset):
    import time

    fleet = build_fleet(small_dataset, latency=LatencySpec(fixed_ms=60))
    started = time.perf_counter()
    response = fleet[0].respond("At how many miles will I run out of gas")
    elapsed_ms = (time.perf_counter() - started) * 1000
    assert elapsed_ms >= 55
    assert response.latency_ms == 60


def test_wire_protocol_matches_in_process(small_dataset, server_thread):
    import httpx

    fleet = build_fleet(small_dataset)
    srv = server_thread(build_fleet_app(fleet))
    for agent in fleet:
        for query in ("At how many miles will I run out of gas", "unknown thing"):
            wire = httpx.post(
                f"{srv.base_url}/{agent.profile.id}/respond", json={"text": query}, timeout=5
            ).json()
            local = agent.respond(query)
            assert wire == {"agent": local.agent_id, "text": local.text, "status": local.status}


def test_fleet_app_rejects_unknown_agent_and_bad_body(small_dataset, server_thread):
    import httpx

    srv = server_thread(build_fleet_app(build_fleet(small_dataset)))
    assert httpx.post(f"{srv.base_url}/nobody/respond", json={"text": "x"}).status_code == 404
    assert httpx.post(f"{srv.base_url}/adasa/respond", json={"nope": 1}).status_code == 400
    agents = httpx.get(f"{srv.base_url}/agents").json()
    assert {a["id"] for a in agents} == {"adasa", "houndify", "google"}
