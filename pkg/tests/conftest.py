import numpy as np
import pytest

from linkunlink.netio import SnapshotSequence, adjacency_from_pairs


def random_adjacency(n, p, rng):
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return adjacency_from_pairs(np.argwhere(upper), n)


def random_sequence(n, N, p, seed):
    rng = np.random.default_rng(seed)
    return SnapshotSequence([random_adjacency(n, p, rng) for _ in range(N)], n)


@pytest.fixture
def triangle():
    return adjacency_from_pairs([(0, 1), (1, 2), (0, 2)], 3)


@pytest.fixture
def single_edge():
    return adjacency_from_pairs([(0, 1)], 2)


# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
