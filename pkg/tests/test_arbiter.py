import random
import time

import pytest
from hypothesis import given, settings, strategies as st

from ofa.arbiter import (
    ArbitrationResult,
    ScorerHandle,
    arbitrate,
    remote_score,
    score_candidates,
    select_best,
)
from ofa.lexical import build_index, bm25_score, tfidf_cosine
from ofa.protocol import (
    ScorerProtocolError,
    ScorerUnavailable,
    check_scorer_conformance,
    parse_scorer_reply,
    scorer_request,
)
from ofa.stubscorer import build_stub_scorer_app


def test_scorer_handle_validation():
    with pytest.raises(ValueError):
        ScorerHandle(kind="remote")
    with pytest.raises(ValueError):
        ScorerHandle(kind="wat")


def test_bm25_kind_matches_lexical_micro_index():
    candidates = [("a", "it is 3 pm"), ("b", "cannot help with that")]
    scored = dict(score_candidates(ScorerHandle(kind="bm25"), "what time is it", candidates))
    index = build_index(candidates)
    for agent, _ in candidates:
        assert scored[agent] == pytest.approx(bm25_score(index, "what time is it", agent), abs=0)
    assert scored["a"] > scored["b"]


def test_tfidf_kind_matches_lexical():
    candidates = [("a", "the weather is sunny"), ("b", "your balance is low")]
    scored = dict(score_candidates(ScorerHandle(kind="tfidf_cosine"), "weather sunny", candidates))
    index = build_index(candidates)
    assert scored["a"] == pytest.approx(tfidf_cosine("weather sunny", "the weather is sunny", index))


def test_empty_candidates():
    assert score_candidates(ScorerHandle(kind="bm25"), "anything", []) == []


def test_select_best_argmax_and_ties():
    assert select_best([("alexa", 0.2), ("google", 0.9)]).selected_agent == "google"
    assert select_best([("a", 0.5), ("b", 0.5)]).selected_agent == "a"
    empty = select_best([])
    assert empty == ArbitrationResult(ranked=(), selected_agent=None, selected_text=None)


def test_select_best_carries_text():
    result = arbitrate(
        ScorerHandle(kind="bm25"),
        "what time is it",
        [("a", "it is 3 pm"), ("b", "cannot help with that")],
    )
    assert result.selected_agent == "a"
    assert result.selected_text == "it is 3 pm"
    assert [r[0] for r in result.ranked] == ["a", "b"]


@settings(max_examples=60, deadline=None)
@given(
    scores=st.lists(
        st.tuples(st.sampled_from(["a", "b", "c", "d"]), st.floats(-5, 5)),
        max_size=6,
        unique_by=lambda kv: kv[0],
    )
)
def test_select_best_permutation_invariant(scores):
    rng = random.Random(1)
    shuffled = scores[:]
    rng.shuffle(shuffled)
    assert select_best(scores).selected_agent == select_best(shuffled).selected_agent


@settings(max_examples=60, deadline=None)
@given(
    scores=st.lists(
        st.tuples(st.sampled_from(["a", "b", "c", "d"]), st.integers(-80, 80).map(lambda v: v / 16)),
        max_size=6,
        unique_by=lambda kv: kv[0],
    ),
    scale=st.sampled_from([0.25, 0.5, 1.0, 2.0, 4.0]),
    shift=st.integers(-48, 48).map(lambda v: v / 16),
)
def test_select_best_monotone_transform_invariant(scores, scale, shift):
    # Dyadic values keep the transform exact in binary floating point, so the
    # order (and any ties) survives untouched.
    transformed = [(a, scale * s + shift) for a, s in scores]
    assert select_best(scores).selected_agent == select_best(transformed).selected_agent


def test_parse_scorer_reply_contract():
    assert parse_scorer_reply({"scores": [0.1, 0.9]}, 2) == [0.1, 0.9]
    with pytest.raises(ScorerProtocolError):
        parse_scorer_reply({"scores": [0.1]}, 2)
    with pytest.raises(ScorerProtocolError):
        parse_scorer_reply({"scores": [float("nan"), 0.0]}, 2)
    with pytest.raises(ScorerProtocolError):
        parse_scorer_reply({"wrong": []}, 0)
    with pytest.raises(ScorerProtocolError):
        parse_scorer_reply({"scores": ["high", 0.0]}, 2)


def test_scorer_request_shape():
    body = scorer_request("q", [("a", "t1"), ("b", "t2")])
    assert body == {"query": "q", "candidates": [{"id": "a", "text": "t1"}, {"id": "b", "text": "t2"}]}


def test_remote_constant_stub(server_thread):
    srv = server_thread(build_stub_scorer_app(mode="constant", value=0.5))
    scores = remote_score(f"{srv.base_url}/score", "hi", [("a", "x"), ("b", "y")], timeout_ms=2000)
    assert scores == [0.5, 0.5]
    scored = score_candidates(
        ScorerHandle(kind="remote", remote_endpoint=f"{srv.base_url}/score"),
        "hi",
        [("a", "x"), ("b", "y")],
    )
    assert scored == [("a", 0.5), ("b", 0.5)]


def test_remote_round_trip_preserves_scores(server_thread):
    from fastapi import FastAPI

    payload = [0.12345678901234567, 1e-9, 3.0000000000000004, -2.5]
    app = FastAPI()

    @app.post("/score")
    def score(body: dict):
        return {"scores": payload[: len(body["candidates"])]}

    srv = server_thread(app)
    got = remote_score(f"{srv.base_url}/score", "q", [("a", ""), ("b", ""), ("c", ""), ("d", "")])
    for g, p in zip(got, payload):
        assert abs(g - p) <= 1e-12


def test_remote_length_mismatch_is_error(server_thread):
    from fastapi import FastAPI

    app = FastAPI()

    @app.post("/score")
    def score(body: dict):
        return {"scores": [0.5]}

    srv = server_thread(app)
    with pytest.raises(ScorerProtocolError, match="1 scores for 2"):
        remote_score(f"{srv.base_url}/score", "q", [("a", ""), ("b", "")])


@pytest.fixture
def silent_endpoint():
    """Accepts TCP connections but never replies: forces a read timeout."""
    import socket
    import threading

    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    sock.listen(5)
    port = sock.getsockname()[1]
    held = []

    def hold():
        while True:
            try:
                conn, _ = sock.accept()
            except OSError:
                return
            held.append(conn)

    thread = threading.Thread(target=hold, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{port}/score"
    sock.close()
    for conn in held:
        conn.close()


def test_remote_unresponsive_times_out(silent_endpoint):
    started = time.perf_counter()
    with pytest.raises(ScorerUnavailable):
        remote_score(silent_endpoint, "q", [("a", "")], timeout_ms=300)
    elapsed_ms = (time.perf_counter() - started) * 1000
    assert elapsed_ms < 300 + 700  # scheduling slack


def test_remote_failure_falls_back_when_configured(silent_endpoint):
    handle = ScorerHandle(
        kind="remote",
        remote_endpoint=silent_endpoint,
        timeout_ms=200,
        fall_back_to_bm25=True,
    )
    candidates = [("a", "it is 3 pm"), ("b", "cannot help")]
    scored = dict(score_candidates(handle, "what time is it", candidates))
    index = build_index(candidates)
    assert scored["a"] == pytest.approx(bm25_score(index, "what time is it", "a"))


def test_remote_refused_connection_is_unavailable():
    from tests.conftest import free_port

    endpoint = f"http://127.0.0.1:{free_port()}/score"
    handle = ScorerHandle(kind="remote", remote_endpoint=endpoint, timeout_ms=500)
    with pytest.raises(ScorerUnavailable):
        score_candidates(handle, "q", [("a", "x")])


@pytest.mark.parametrize("mode", ["constant", "overlap"])
def test_stub_scorer_passes_conformance(mode):
    from fastapi.testclient import TestClient

    client = TestClient(build_stub_scorer_app(mode=mode))

    def post(body):
        reply = client.post("/score", json=body)
        try:
            parsed = reply.json()
        except ValueError:
            parsed = None
        return reply.status_code, parsed

    results = check_scorer_conformance(post)
    assert all(ok for _, ok, _ in results), results


def test_oracle_stub_scores_gold(server_thread):
    app = build_stub_scorer_app(
        mode="oracle", gold_by_query={"Is it gonna be warm Friday in Alhambra?": {"google", "houndify"}}
    )
    srv = server_thread(app)
    scores = remote_score(
        f"{srv.base_url}/score",
        "is it gonna be warm friday in alhambra?",
        [("alexa", "..."), ("google", "..."), ("houndify", "..."), ("adasa", "...")],
    )
    assert scores == [0.0, 1.0, 1.0, 0.0]
