import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES = TESTS_DIR / "fixtures"

sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def table3_pom():
    return (FIXTURES / "claims-portal" / "pom.xml").read_bytes()


@pytest.fixture
def store():
    from depgate.store import DrdStore

    s = DrdStore(":memory:")
    yield s
    s.close()


@pytest.fixture
def free_port_pair():
    import socket

    sockets = [socket.socket(), socket.socket()]
    for s in sockets:
        s.bind(("127.0.0.1", 0))
    ports = [s.getsockname()[1] for s in sockets]
    for s in sockets:
        s.close()
    return ports
