import numpy as np
import pytest

from neuralscorer.checkpoint import load_model, save_model
from neuralscorer.model import masked_mean_pool, pack
from neuralscorer.tokenizer import CLS, PAD, SEP, Vocab, tokenize


def test_tokenize_rule():
    assert tokenize("What's the weather?") == ["what", "s", "the", "weather"]
    assert tokenize("") == []


def test_vocab_build_and_unk(tiny_vocab):
    ids = tiny_vocab.encode("the weather is zorbly")
    assert ids[-1] == 1  # unknown token
    assert all(i >= 4 for i in ids[:-1])
    assert tiny_vocab.encode("") == []


def test_pack_shapes_and_mask():
    ids, mask = pack([[2, 5, 6], [2]])
    assert ids.shape == (2, 3)
    assert ids[1, 1] == PAD
    assert mask.tolist() == [[1, 1, 1], [1, 0, 0]]
    ids, mask = pack([[]])
    assert ids.shape == (1, 1)
    assert mask.sum() == 0


def test_cross_score_in_open_interval(tiny_cross):
    for q, r in [("weather", "sunny today"), ("", ""), ("balance", "didn't get that")]:
        s = tiny_cross.score(q, r)
        assert 0.0 < s < 1.0


def test_cross_inference_deterministic(tiny_cross):
    a = tiny_cross.score("the weather", "sunny today")
    b = tiny_cross.score("the weather", "sunny today")
    assert a == b


def test_cross_truncates_long_response(tiny_cross):
    long_response = "piano " * 100
    ids = tiny_cross.pair_ids("weather today", long_response)
    assert len(ids) <= tiny_cross.config.max_len
    assert ids[0] == CLS and SEP in ids
    # scoring still works
    assert 0.0 < tiny_cross.score("weather today", long_response) < 1.0


def test_cross_is_query_sensitive(tiny_cross):
    # Joint attention: the same response's hidden states change with the query.
    response = "sunny today"
    ids1, mask1 = pack([tiny_cross.pair_ids("the weather", response)])
    ids2, mask2 = pack([tiny_cross.pair_ids("balance loan", response)])
    h1, _ = tiny_cross.encoder.forward(ids1, mask1)
    h2, _ = tiny_cross.encoder.forward(ids2, mask2)
    # compare the states at the response positions (tail of each sequence)
    r_len = len(tiny_cross.vocab.encode(response))
    assert not np.allclose(h1[0, -r_len:, :], h2[0, -r_len:, :])


def test_bi_response_encoding_is_query_independent(tiny_bi):
    response = "sunny today"
    cached = tiny_bi.encode(response)
    for query in ("the weather", "balance loan", ""):
        fresh = tiny_bi.encode(response)
        assert np.array_equal(cached, fresh)
        assert tiny_bi.score(query, response) == pytest.approx(
            float(tiny_bi.encode(query) @ cached), abs=0
        )


def test_bi_zero_pooled_response_scores_zero(tiny_bi):
    assert tiny_bi.score("the weather is sunny", "") == 0.0
    pooled = masked_mean_pool(np.ones((1, 3, 4)), np.zeros((1, 3)))
    assert np.array_equal(pooled, np.zeros((1, 4)))


def test_bi_score_batch_matches_single(tiny_bi):
    responses = ["sunny today", "didn't get that", "balance loan"]
    batch = tiny_bi.score_batch("the weather", responses)
    singles = [tiny_bi.score("the weather", r) for r in responses]
    assert batch == pytest.approx(singles, abs=1e-12)
    assert tiny_bi.score_batch("the weather", []) == []


def test_config_validation(tiny_vocab):
    from neuralscorer.model import EncoderConfig

    with pytest.raises(ValueError):
        EncoderConfig(vocab_size=tiny_vocab.size, embed_dim=9, heads=2)
    with pytest.raises(ValueError):
        EncoderConfig(vocab_size=2)


def test_checkpoint_round_trip(tiny_cross, tmp_path):
    path = tmp_path / "model.npz"
    save_model(tiny_cross, path)
    loaded = load_model(path)
    assert type(loaded).__name__ == "CrossEncoder"
    for q, r in [("weather", "sunny today"), ("balance", "didn't get that")]:
        assert loaded.score(q, r) == tiny_cross.score(q, r)


def test_checkpoint_round_trip_bi(tiny_bi, tmp_path):
    path = tmp_path / "model.npz"
    save_model(tiny_bi, path)
    loaded = load_model(path)
    assert type(loaded).__name__ == "BiEncoder"
    assert loaded.score("weather", "sunny today") == tiny_bi.score("weather", "sunny today")


def test_checkpoint_rejects_unknown_format(tiny_cross, tmp_path):
    import json

    import numpy as np

    path = tmp_path / "bad.npz"
    header = {"format": "other/9", "mode": "cross", "config": {}, "vocab": {}}
    np.savez(path, __header__=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8))
    with pytest.raises(ValueError, match="unsupported"):
        load_model(path)
