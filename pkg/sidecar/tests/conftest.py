import pytest

from neuralscorer.model import BiEncoder, CrossEncoder, EncoderConfig
from neuralscorer.tokenizer import Vocab


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion, with any recorded
    # side metrics (e.g. the BM25 contrast figure).
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::", 1)[-1]
        outcome = "PASS" if report.passed else ("FAIL" if report.failed else "SKIP")
        extras = " ".join(f"{k}={v}" for k, v in report.user_properties)
        suffix = f" ({extras})" if extras else ""
        print(f"\nACCEPTANCE {name}: {outcome}{suffix}", flush=True)

TINY_TEXTS = [
    "the weather is sunny today",
    "didn't get that",
    "balance loan deposit credit",
    "play a song on the piano",
]


@pytest.fixture(scope="session")
def tiny_vocab():
    return Vocab.build(TINY_TEXTS)


@pytest.fixture
def tiny_cross(tiny_vocab):
    config = EncoderConfig(
        vocab_size=tiny_vocab.size, embed_dim=8, layers=2, heads=2, max_len=16, ffn_mult=2, seed=0
    )
    return CrossEncoder(config, tiny_vocab)


@pytest.fixture
def tiny_bi(tiny_vocab):
    config = EncoderConfig(
        vocab_size=tiny_vocab.size, embed_dim=8, layers=2, heads=2, max_len=16, ffn_mult=2, seed=0
    )
    return BiEncoder(config, tiny_vocab)
