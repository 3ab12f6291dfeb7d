import json
import os
import socket
import threading
import time

import pytest

from ofa.model import load_dataset
from ofa.synth import make_replica

# Real published corpus when mounted (OFA_PUBLISHED_DATASET=<path>), otherwise
# the deterministic synthetic replica with the same headline statistics.
PUBLISHED_ENV = "OFA_PUBLISHED_DATASET"


@pytest.fixture(scope="session")
def published_dataset():
    path = os.environ.get(PUBLISHED_ENV)
    if path:
        return load_dataset(path)
    return make_replica(seed=7)


@pytest.fixture(scope="session")
def published_is_replica():
    return PUBLISHED_ENV not in os.environ


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class ServerThread:
    """uvicorn in a daemon thread, for wire-level tests."""

    def __init__(self, app, port: int | None = None):
        import uvicorn

        self.port = port or free_port()
        config = uvicorn.Config(app, host="127.0.0.1", port=self.port, log_level="error")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self):
        self.thread.start()
        deadline = time.time() + 10
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        return self

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=5)


@pytest.fixture
def server_thread():
    servers = []

    def start(app):
        srv = ServerThread(app)
        srv.__enter__()
        servers.append(srv)
        return srv

    yield start
    for srv in servers:
        srv.__exit__(None, None, None)


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::", 1)[-1]
        outcome = "PASS" if report.passed else ("FAIL" if report.failed else "SKIP")
        print(f"\nACCEPTANCE {name}: {outcome}", flush=True)
