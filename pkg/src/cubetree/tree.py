"""Rooted trees: parsing, generation, O(1) LCA and distance queries.

Vertex ids are dense integers ``0..n-1`` and are never relabelled.  The LCA
structure is an Euler tour with a sparse table over tour depths, so many
distance queries can be answered in vectorised form.
"""
from __future__ import annotations

import heapq
from collections import deque
from typing import Iterable, Sequence

import numpy as np


class TreeFormatError(ValueError):
    """Raised for malformed edge-list input or invalid tree structure."""


GENERATOR_KINDS = ("path", "star", "caterpillar", "broom", "complete_kary", "random_pruefer")


class RootedTree:
    """Immutable rooted tree with preorder, subtree and LCA tables."""

    __slots__ = (
        "n", "root", "parent", "depth", "children", "order", "tin", "tout",
        "size", "height", "_first", "_sparse", "_log",
    )

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], root: int = 0):
        if n < 1:
            raise TreeFormatError("tree must have at least one vertex")
        if not 0 <= root < n:
            raise TreeFormatError(f"root {root} outside 0..{n - 1}")
        adj: list[list[int]] = [[] for _ in range(n)]
        count = 0
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
            count += 1
        if count != n - 1:
            raise TreeFormatError(f"expected {n - 1} edges, got {count}")

        parent = np.full(n, -1, dtype=np.int64)
        depth = np.full(n, -1, dtype=np.int64)
        depth[root] = 0
        queue = deque([root])
        seen = 1
        while queue:
            u = queue.popleft()
            du = depth[u] + 1
            for w in adj[u]:
                if depth[w] < 0:
                    depth[w] = du
                    parent[w] = u
                    queue.append(w)
                    seen += 1
        if seen != n:
            raise TreeFormatError("input is disconnected")

        children = [sorted(w for w in adj[u] if w != parent[u]) for u in range(n)]
        order = np.empty(n, dtype=np.int64)
        euler: list[int] = []
        first = np.empty(n, dtype=np.int64)
        # iterative DFS emitting preorder and the Euler tour
        stack = [(root, 0)]
        pos = 0
        while stack:
            u, i = stack.pop()
            if i == 0:
                order[pos] = u
                pos += 1
                first[u] = len(euler)
            euler.append(u)
            if i < len(children[u]):
                stack.append((u, i + 1))
                stack.append((children[u][i], 0))

        tin = np.empty(n, dtype=np.int64)
        tin[order] = np.arange(n)
        size = np.ones(n, dtype=np.int64)
        par_list = parent.tolist()
        size_list = [1] * n
        for u in reversed(order.tolist()):
            p = par_list[u]
            if p >= 0:
                size_list[p] += size_list[u]
        size[:] = size_list

        self.n = n
        self.root = root
        self.parent = parent
        self.depth = depth
        self.children = tuple(tuple(c) for c in children)
        self.order = order
        self.tin = tin
        self.tout = tin + size
        self.size = size
        self.height = int(depth.max())
        self._first = first
        self._build_sparse(np.asarray(euler, dtype=np.int64))
        for arr in (parent, depth, order, tin, self.tout, size, first):
            arr.setflags(write=False)

    def _build_sparse(self, euler: np.ndarray) -> None:
        m = len(euler)
        levels = [euler]
        span = 1
        while 2 * span <= m:
            prev = levels[-1]
            a, b = prev[: m - 2 * span + 1], prev[span: m - span + 1]
            levels.append(np.where(self.depth[a] <= self.depth[b], a, b))
            span *= 2
        self._sparse = levels
        _, exp = np.frexp(np.arange(m + 1, dtype=np.float64))
        self._log = np.maximum(exp.astype(np.int64) - 1, 0)

    # ------------------------------------------------------------------
    # queries

    def _check(self, *vs: int) -> None:
        for v in vs:
            if not 0 <= v < self.n:
                raise IndexError(f"invalid vertex id {v}")

    def lca(self, u: int, v: int) -> int:
        self._check(u, v)
        return int(self.lca_many(np.array([u]), np.array([v]))[0])

    def dist(self, u: int, v: int) -> int:
        self._check(u, v)
        w = self.lca(u, v)
        return int(self.depth[u] + self.depth[v] - 2 * self.depth[w])

    def lca_many(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        l = self._first[us]
        r = self._first[vs]
        lo = np.minimum(l, r)
        hi = np.maximum(l, r)
        k = self._log[hi - lo + 1]
        out = np.empty(len(lo), dtype=np.int64)
        for j in np.unique(k):
            sel = k == j
            row = self._sparse[j]
            a = row[lo[sel]]
            b = row[hi[sel] - (1 << int(j)) + 1]
            out[sel] = np.where(self.depth[a] <= self.depth[b], a, b)
        return out

    def dist_many(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        w = self.lca_many(us, vs)
        return self.depth[us] + self.depth[vs] - 2 * self.depth[w]

    def dist_from(self, v: int) -> np.ndarray:
        self._check(v)
        return self.dist_many(np.full(self.n, v, dtype=np.int64), np.arange(self.n))

    def ball_size(self, v: int, r: int) -> int:
        if r < 1:
            raise ValueError("radius must be a positive integer")
        return int(np.count_nonzero(self.dist_from(v) <= r))

    # ------------------------------------------------------------------
    # structure

    def degrees(self) -> np.ndarray:
        deg = np.fromiter((len(c) for c in self.children), dtype=np.int64, count=self.n)
        deg[np.arange(self.n) != self.root] += 1
        return deg

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n > 1 else 0

    def is_path(self) -> bool:
        return self.max_degree() <= 2

    def edges(self) -> list[tuple[int, int]]:
        """(parent, child) pairs ordered by child id."""
        return [(int(self.parent[v]), v) for v in range(self.n) if v != self.root]

    def is_adjacent(self, u: int, v: int) -> bool:
        return u != v and (self.parent[u] == v or self.parent[v] == u)

    def adjacent_many(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        return (self.parent[us] == vs) | (self.parent[vs] == us)

    def diameter(self) -> int:
        if self.n == 1:
            return 0
        a = int(np.argmax(self.dist_from(self.root)))
        return int(self.dist_from(a).max())

    def path(self, u: int, v: int) -> list[int]:
        """Vertices on the u-v path, in order from u to v."""
        w = self.lca(u, v)
        left, right = [], []
        while u != w:
            left.append(u)
            u = int(self.parent[u])
        while v != w:
            right.append(v)
            v = int(self.parent[v])
        return left + [w] + right[::-1]

    def center(self) -> int:
        """A vertex of minimum eccentricity; the smaller id when there are two."""
        if self.n <= 2:
            return 0
        a = int(np.argmax(self.dist_from(0)))
        da = self.dist_from(a)
        b = int(np.argmax(da))
        diam = int(da[b])
        path = self.path(a, b)
        mids = {path[diam // 2], path[(diam + 1) // 2]}
        return min(mids)

    def rerooted(self, root: int) -> "RootedTree":
        self._check(root)
        if root == self.root:
            return self
        return RootedTree(self.n, self.edges(), root=root)

    def subtree_sizes_consistent(self) -> bool:
        kids = np.zeros(self.n, dtype=np.int64)
        nonroot = np.arange(self.n) != self.root
        np.add.at(kids, self.parent[nonroot], self.size[nonroot])
        return bool(np.all(kids + 1 == self.size))

    def __repr__(self) -> str:
        return f"RootedTree(n={self.n}, root={self.root}, height={self.height})"


# ----------------------------------------------------------------------
# edge-list text format


def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def parse_edge_list(text: str) -> tuple[int, list[tuple[int, int]]]:
    """Parse ``n`` followed by ``u v`` lines; no structural checks beyond ids."""
    lines = _content_lines(text)
    if not lines:
        raise TreeFormatError("empty input")
    lineno, head = lines[0]
    try:
        n = int(head)
    except ValueError:
        raise TreeFormatError(f"line {lineno}: expected vertex count, got {head!r}") from None
    if n < 1:
        raise TreeFormatError(f"line {lineno}: vertex count must be >= 1")
    edges = []
    seen = set()
    for lineno, line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise TreeFormatError(f"line {lineno}: malformed edge {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise TreeFormatError(f"line {lineno}: malformed edge {line!r}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise TreeFormatError(f"line {lineno}: vertex out of range in {line!r}")
        if u == v:
            raise TreeFormatError(f"line {lineno}: self-loop at {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise TreeFormatError(f"line {lineno}: duplicate edge {u} {v}")
        seen.add(key)
        edges.append((u, v))
    return n, edges


def parse_tree(text: str, root: str | int = "center") -> RootedTree:
    """Parse the edge-list format into a tree.

    ``root`` is ``"center"`` (re-root at a tree center), ``"preserve"``
    (vertex 0, the input root) or an explicit vertex id.
    """
    n, edges = parse_edge_list(text)
    uf = list(range(n))

    def find(x: int) -> int:
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    for u, v in edges:
        a, b = find(u), find(v)
        if a == b:
            raise TreeFormatError(f"cycle detected at edge {u} {v}")
        uf[a] = b
    if len(edges) != n - 1:
        raise TreeFormatError(f"input is disconnected ({len(edges)} edges on {n} vertices)")
    tree = RootedTree(n, edges, root=0)
    return apply_root_policy(tree, root)


def apply_root_policy(tree: RootedTree, root: str | int) -> RootedTree:
    if root == "center":
        return tree.rerooted(tree.center())
    if root == "preserve":
        return tree.rerooted(0)
    if isinstance(root, (int, np.integer)):
        return tree.rerooted(int(root))
    raise ValueError(f"unknown root policy {root!r}")


def format_edge_list(tree: RootedTree) -> str:
    lines = [str(tree.n)]
    lines.extend(f"{p} {c}" for p, c in tree.edges())
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# generators


def _need(name: str, value: int, lo: int) -> int:
    if not isinstance(value, (int, np.integer)) or value < lo:
        raise ValueError(f"parameter {name} must be an integer >= {lo}, got {value!r}")
    return int(value)


def pruefer_decode(seq: Sequence[int], n: int) -> list[tuple[int, int]]:
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((x, leaf))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((a, b))
    return edges


def generate(kind: str, seed: int = 0, **params: int) -> RootedTree:
    """Deterministic tree generator; every tree is rooted at vertex 0.

    kinds and parameters::

        path           n
        star           m            (K_{1,m}, center 0)
        caterpillar    spine, legs  (legs pendant leaves on every spine vertex)
        broom          handle, bristles
        complete_kary  arity, depth
        random_pruefer n            (uses seed)
    """
    if kind == "path":
        n = _need("n", params.get("n", 0), 1)
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "star":
        m = _need("m", params.get("m", 0), 1)
        n = m + 1
        edges = [(0, i) for i in range(1, n)]
    elif kind == "caterpillar":
        spine = _need("spine", params.get("spine", 0), 1)
        legs = _need("legs", params.get("legs", 1), 0)
        n = spine * (1 + legs)
        edges = [(i, i + 1) for i in range(spine - 1)]
        edges += [(i, spine + i * legs + j) for i in range(spine) for j in range(legs)]
    elif kind == "broom":
        handle = _need("handle", params.get("handle", 0), 1)
        bristles = _need("bristles", params.get("bristles", 0), 1)
        n = handle + bristles
        edges = [(i, i + 1) for i in range(handle - 1)]
        edges += [(handle - 1, handle + j) for j in range(bristles)]
    elif kind == "complete_kary":
        arity = _need("arity", params.get("arity", 0), 2)
        depth = _need("depth", params.get("depth", -1), 0)
        n = (arity ** (depth + 1) - 1) // (arity - 1)
        edges = [((v - 1) // arity, v) for v in range(1, n)]
    elif kind == "random_pruefer":
        n = _need("n", params.get("n", 0), 1)
        if n <= 2:
            edges = [(0, 1)] if n == 2 else []
        else:
            rng = np.random.default_rng(seed)
            seq = rng.integers(0, n, size=n - 2).tolist()
            edges = pruefer_decode(seq, n)
    else:
        raise ValueError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")
    return RootedTree(n, edges, root=0)
