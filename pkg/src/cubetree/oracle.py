"""Exact cubicity of tiny graphs.

A graph has cubicity ``<= k`` iff it is the intersection of ``k`` unit
interval graphs on its vertex set.  Unit interval graphs are exactly the
graphs with an umbrella ordering: with ``r(i)`` the last neighbour of
position ``i``, the map is non-decreasing and ``i ~ j`` (``i < j``) iff
``j <= r(i)``.  For a fixed ordering the smallest such supergraph of ``G``
is unique, so minimal supergraphs are one per ordering.  The cubicity is the
fewest supergraphs whose missing edges cover every non-edge of ``G``.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Iterable, Iterator

from .tree import RootedTree, TreeFormatError, _content_lines

DEFAULT_MAX_N = 7
HARD_MAX_N = 8


class OracleError(ValueError):
    pass


class OracleTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class SmallGraph:
    n: int
    adj: tuple[int, ...]     # adj[u] is the neighbour bitset of u

    def __post_init__(self):
        if len(self.adj) != self.n:
            raise OracleError("adjacency length does not match n")
        for u, row in enumerate(self.adj):
            if row >> u & 1:
                raise OracleError(f"self-loop at {u}")
            if row >> self.n:
                raise OracleError("neighbour out of range")
            for v in range(self.n):
                if (row >> v & 1) != (self.adj[v] >> u & 1):
                    raise OracleError("adjacency is not symmetric")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "SmallGraph":
        adj = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise OracleError(f"edge ({u}, {v}) out of range")
            if u == v:
                raise OracleError(f"self-loop at {u}")
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return cls(n, tuple(adj))

    @classmethod
    def from_tree(cls, tree: RootedTree) -> "SmallGraph":
        return cls.from_edges(tree.n, tree.edges())

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj[u] >> v & 1)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in range(u + 1, self.n) if self.has_edge(u, v)]

    def non_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in range(u + 1, self.n) if not self.has_edge(u, v)]

    def is_complete(self) -> bool:
        return not self.non_edges()

    def contains(self, other: "SmallGraph") -> bool:
        """Edge set of ``self`` includes that of ``other``."""
        return all((a & b) == b for a, b in zip(self.adj, other.adj))


def parse_graph(text: str) -> SmallGraph:
    """Edge-list document: vertex count on the first line, then ``u v`` lines."""
    lines = _content_lines(text)
    if not lines:
        raise TreeFormatError("empty input")
    lineno, first = lines[0]
    try:
        n = int(first)
    except ValueError:
        raise TreeFormatError(f"line {lineno}: expected a vertex count, got {first!r}") from None
    if n < 1:
        raise TreeFormatError("vertex count must be >= 1")
    seen = set()
    edges = []
    for lineno, line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise TreeFormatError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise TreeFormatError(f"line {lineno}: non-integer vertex id") from None
        if not (0 <= u < n and 0 <= v < n):
            raise TreeFormatError(f"line {lineno}: vertex id out of range")
        if u == v:
            raise TreeFormatError(f"line {lineno}: self-loop")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise TreeFormatError(f"line {lineno}: duplicate edge {key}")
        seen.add(key)
        edges.append(key)
    if n > HARD_MAX_N:
        raise OracleError(f"oracle handles at most {HARD_MAX_N} vertices, got {n}")
    return SmallGraph.from_edges(n, edges)


def _check_size(g: SmallGraph, limit: int) -> None:
    if g.n > limit:
        raise OracleError(f"graph has {g.n} vertices; the limit is {limit}")


def _minimal_reach(g: SmallGraph, order: tuple[int, ...]) -> list[int]:
    """Smallest non-decreasing last-neighbour map covering ``g`` in ``order``."""
    n = g.n
    pos = [0] * n
    for i, v in enumerate(order):
        pos[v] = i
    reach = []
    best = 0
    for i, v in enumerate(order):
        r = i
        row = g.adj[v]
        while row:
            low = row & -row
            w = low.bit_length() - 1
            r = max(r, pos[w])
            row ^= low
        best = max(best, r)
        reach.append(best)
    return reach


def _graph_from_reach(order: tuple[int, ...], reach: list[int]) -> SmallGraph:
    n = len(order)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, reach[i] + 1):
            a, b = order[i], order[j]
            adj[a] |= 1 << b
            adj[b] |= 1 << a
    return SmallGraph(n, tuple(adj))


def _reach_extensions(lo: list[int], n: int) -> Iterator[list[int]]:
    """Every non-decreasing map ``r >= lo`` with ``r(i) <= n - 1``."""
    out = [0] * n

    def rec(i: int, floor: int):
        if i == n:
            yield list(out)
            return
        for r in range(max(lo[i], floor), n):
            out[i] = r
            yield from rec(i + 1, r)

    yield from rec(0, 0)


def proper_interval_supergraphs(g: SmallGraph, minimal_only: bool = False,
                                limit: int = HARD_MAX_N) -> list[SmallGraph]:
    """Distinct unit interval graphs on V(g) whose edges include E(g).

    With ``minimal_only`` only the least supergraph of each ordering is kept,
    which is all the cover search needs.  Results are sorted by adjacency.
    """
    _check_size(g, limit)
    found: set[SmallGraph] = set()
    for order in itertools.permutations(range(g.n)):
        lo = _minimal_reach(g, order)
        if minimal_only:
            found.add(_graph_from_reach(order, lo))
        else:
            for reach in _reach_extensions(lo, g.n):
                found.add(_graph_from_reach(order, reach))
    return sorted(found, key=lambda h: h.adj)


def is_unit_interval(g: SmallGraph) -> bool:
    return any(h == g for h in proper_interval_supergraphs(g, minimal_only=True))


def _missed_masks(g: SmallGraph, nonedges: list[tuple[int, int]]) -> list[int]:
    masks = set()
    for h in proper_interval_supergraphs(g, minimal_only=True):
        m = 0
        for idx, (u, v) in enumerate(nonedges):
            if not h.has_edge(u, v):
                m |= 1 << idx
        if m:
            masks.add(m)
    # keep only inclusion-maximal masks
    ordered = sorted(masks, key=lambda m: (-m.bit_count(), m))
    maximal: list[int] = []
    for m in ordered:
        if not any(m | big == big for big in maximal):
            maximal.append(m)
    return maximal


def _cover(full: int, masks: list[int], k: int, deadline: float | None) -> list[int] | None:
    failed: set[tuple[int, int]] = set()
    biggest = max(m.bit_count() for m in masks)

    def rec(uncovered: int, left: int) -> list[int] | None:
        if uncovered == 0:
            return []
        if left == 0 or uncovered.bit_count() > left * biggest or (uncovered, left) in failed:
            return None
        if deadline is not None and time.monotonic() > deadline:
            raise OracleTimeout("set cover search timed out")
        low = uncovered & -uncovered
        for m in masks:
            if m & low:
                rest = rec(uncovered & ~m, left - 1)
                if rest is not None:
                    return [m] + rest
        failed.add((uncovered, left))
        return None

    return rec(full, k)


def exact_cubicity(g: SmallGraph | RootedTree, allow_8: bool = False, timeout: float | None = None) -> int:
    """Minimum number of unit interval supergraphs intersecting exactly to ``g``."""
    if isinstance(g, RootedTree):
        g = SmallGraph.from_tree(g)
    _check_size(g, HARD_MAX_N if allow_8 else DEFAULT_MAX_N)
    nonedges = g.non_edges()
    if not nonedges:
        return 0
    masks = _missed_masks(g, nonedges)
    full = (1 << len(nonedges)) - 1
    deadline = None if timeout is None else time.monotonic() + timeout
    bound = -(-2 * g.n // 3)
    for k in range(1, max(bound, 1) + 1):
        if _cover(full, masks, k, deadline) is not None:
            return k
    raise OracleError(f"no cover with at most {bound} unit interval graphs")


def cover_witness(g: SmallGraph, k: int) -> list[SmallGraph] | None:
    """``k`` unit interval supergraphs whose edge intersection is E(g), if any."""
    nonedges = g.non_edges()
    if not nonedges:
        return []
    sup = proper_interval_supergraphs(g, minimal_only=True)
    masks = _missed_masks(g, nonedges)
    chosen = _cover((1 << len(nonedges)) - 1, masks, k, None)
    if chosen is None:
        return None
    out = []
    for m in chosen:
        for h in sup:
            hm = sum(1 << i for i, (u, v) in enumerate(nonedges) if not h.has_edge(u, v))
            if hm == m:
                out.append(h)
                break
    return out


# ----------------------------------------------------------------------
# isomorphism classes of small rooted trees


def rooted_canonical(tree: RootedTree) -> str:
    """AHU encoding: equal strings iff the rooted trees are isomorphic."""
    code = [""] * tree.n
    for v in reversed(tree.order.tolist()):
        code[v] = "(" + "".join(sorted(code[c] for c in tree.children[v])) + ")"
    return code[tree.root]


def rooted_classes(trees: Iterable[RootedTree]) -> list[RootedTree]:
    """One representative per rooted isomorphism class over all root choices."""
    seen: dict[str, RootedTree] = {}
    for t in trees:
        for r in range(t.n):
            rt = t.rerooted(r)
            seen.setdefault(rooted_canonical(rt), rt)
    return [seen[k] for k in sorted(seen)]
