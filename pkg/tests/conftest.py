from __future__ import annotations

from collections import deque

import numpy as np
import pytest
from hypothesis import strategies as st

from cubetree.tree import RootedTree, generate


def bfs_distances(n: int, edges) -> np.ndarray:
    """All-pairs distances by plain BFS, independent of the LCA tables."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    out = np.zeros((n, n), dtype=np.int64)
    for s in range(n):
        dist = [-1] * n
        dist[s] = 0
        q = deque([s])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    q.append(y)
        out[s] = dist
    return out


@st.composite
def trees(draw, min_n: int = 1, max_n: int = 60):
    """Random labelled trees via random parent pointers and a random root."""
    n = draw(st.integers(min_n, max_n))
    perm = draw(st.permutations(range(n)))
    edges = []
    for i in range(1, n):
        j = draw(st.integers(0, i - 1))
        edges.append((perm[j], perm[i]))
    root = draw(st.integers(0, n - 1))
    return RootedTree(n, edges, root=root)


def random_tree(rng: np.random.Generator, n: int) -> RootedTree:
    return generate("random_pruefer", seed=int(rng.integers(0, 2**31)), n=n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ----------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record a criterion outcome; the test body calls ``record(number, detail)`` when it passes."""
    pending = {}

    def record(number: int, detail: str) -> None:
        pending[number] = detail

    def start(number: int) -> None:
        pending.setdefault(number, None)

    record.start = start
    yield record
    for number, detail in pending.items():
        ACCEPTANCE[number] = (detail is not None, detail or "see failure above")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
