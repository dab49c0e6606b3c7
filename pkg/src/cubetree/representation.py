"""Cube representations, edge weight assignments and exact verification.

A cube representation places a center ``f(v)`` per vertex so that
``||f(u) - f(v)||_inf <= 1`` exactly when ``uv`` is an edge.  For a rooted
tree, a weight assignment puts a vector in ``[-1, 1]^d`` on every edge, and
the prefix sums ``S_W`` along root paths turn it into centers.

Coordinates are exact: integer numpy arrays, or object arrays of
``Fraction`` when a non-integral value appears.  There is no epsilon anywhere;
a gap of exactly 1 counts as an intersection.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .spatial import close_pairs, is_integral
from .tree import RootedTree

SPATIAL_MIN_N = 256


class RepresentationError(ValueError):
    pass


# ----------------------------------------------------------------------
# exact number helpers


def exact_array(values, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Coerce to an int64 array when every entry is integral, else Fractions."""
    arr = np.asarray(values, dtype=object) if not isinstance(values, np.ndarray) else values
    if shape is not None:
        arr = arr.reshape(shape)
    if is_integral(arr):
        return arr.astype(np.int64)
    if arr.dtype.kind == "b":
        return arr.astype(np.int64)
    if arr.dtype.kind == "f":
        if np.all(np.mod(arr, 1) == 0):
            return arr.astype(np.int64)
        arr = arr.astype(object)
    flat = [Fraction(x) for x in arr.ravel().tolist()]
    if all(x.denominator == 1 for x in flat):
        return np.asarray([int(x) for x in flat], dtype=np.int64).reshape(arr.shape)
    out = np.empty(len(flat), dtype=object)
    out[:] = flat
    return out.reshape(arr.shape)


def _encode(x) -> int | str:
    if isinstance(x, (int, np.integer)):
        return int(x)
    f = Fraction(x)
    return int(f) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def _decode(x) -> Fraction | int:
    if isinstance(x, bool):
        raise RepresentationError("boolean coordinate")
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        return Fraction(x)
    raise RepresentationError(f"coordinate {x!r} is neither an integer nor a rational string")


def _linf(diff: np.ndarray):
    if diff.shape[-1] == 0:
        return np.zeros(diff.shape[:-1], dtype=np.int64)
    return np.abs(diff).max(axis=-1)


# ----------------------------------------------------------------------
# types


@dataclass(frozen=True)
class Block:
    name: str
    start: int
    stop: int

    @property
    def dim(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class WeightAssignment:
    """Weight vectors on tree edges; row ``v`` is the edge from ``parent(v)`` to ``v``.

    ``defined`` marks the edges in the domain; the root row is never defined.
    """
    tree: RootedTree
    weights: np.ndarray
    defined: np.ndarray
    blocks: tuple[Block, ...] = ()

    def __post_init__(self):
        n = self.tree.n
        if self.weights.ndim != 2 or self.weights.shape[0] != n:
            raise RepresentationError("weights must have shape (n, dim)")
        if self.defined.shape != (n,):
            raise RepresentationError("defined mask must have shape (n,)")
        if self.defined[self.tree.root]:
            raise RepresentationError("the root carries no edge")
        if self.weights.size and np.any(np.abs(self.weights) > 1):
            raise RepresentationError("weight entries must lie in [-1, 1]")

    @classmethod
    def from_edges(cls, tree: RootedTree, values: dict[int, Sequence], dim: int) -> "WeightAssignment":
        """Build from ``{child vertex: vector}``."""
        w = np.zeros((tree.n, dim), dtype=object)
        w[:] = 0
        defined = np.zeros(tree.n, dtype=bool)
        for v, vec in values.items():
            if v == tree.root:
                raise RepresentationError("the root carries no edge")
            w[v] = list(vec)
            defined[v] = True
        return cls(tree, exact_array(w), defined)

    @classmethod
    def total(cls, tree: RootedTree, weights: np.ndarray, blocks: tuple[Block, ...] = ()) -> "WeightAssignment":
        defined = np.ones(tree.n, dtype=bool)
        defined[tree.root] = False
        w = exact_array(weights)
        w[tree.root] = 0
        return cls(tree, w, defined, blocks)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def is_total(self) -> bool:
        nonroot = np.ones(self.tree.n, dtype=bool)
        nonroot[self.tree.root] = False
        return bool(np.all(self.defined[nonroot]))

    def edge(self, child: int) -> np.ndarray:
        if not self.defined[child]:
            raise RepresentationError(f"edge above {child} outside the domain")
        return self.weights[child]


@dataclass(frozen=True)
class CubeRepresentation:
    centers: np.ndarray
    blocks: tuple[Block, ...] = ()
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def translated(self, offset: np.ndarray) -> "CubeRepresentation":
        return CubeRepresentation(exact_array(self.centers - offset), self.blocks, dict(self.meta))

    def select(self, columns: Sequence[int], blocks: tuple[Block, ...] | None = None) -> "CubeRepresentation":
        cols = np.asarray(columns, dtype=np.int64)
        return CubeRepresentation(self.centers[:, cols], blocks if blocks is not None else (), dict(self.meta))

    def equals(self, other: "CubeRepresentation") -> bool:
        return self.centers.shape == other.centers.shape and bool(np.all(self.centers == other.centers))

    # -- serialisation

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "dim": self.dim,
            "blocks": [{"name": b.name, "start": b.start, "stop": b.stop} for b in self.blocks],
            "centers": [[_encode(x) for x in row] for row in self.centers.tolist()],
        }
        for key in ("seed", "mode", "t"):
            d[key] = self.meta.get(key)
        extra = {k: v for k, v in self.meta.items() if k not in ("seed", "mode", "t")}
        if extra:
            d["meta"] = extra
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CubeRepresentation":
        try:
            n, dim = int(d["n"]), int(d["dim"])
            rows = d["centers"]
        except (KeyError, TypeError, ValueError) as exc:
            raise RepresentationError(f"malformed representation: {exc}") from None
        if len(rows) != n or any(len(r) != dim for r in rows):
            raise RepresentationError("centers do not match the declared n x dim shape")
        values = [[_decode(x) for x in r] for r in rows]
        centers = exact_array(np.asarray(values, dtype=object).reshape(n, dim)) if n else np.zeros((0, dim), np.int64)
        blocks = tuple(Block(b["name"], int(b["start"]), int(b["stop"])) for b in d.get("blocks", []))
        meta = {k: d.get(k) for k in ("seed", "mode", "t") if d.get(k) is not None}
        meta.update(d.get("meta", {}))
        return cls(centers, blocks, meta)

    @classmethod
    def from_json(cls, text: str) -> "CubeRepresentation":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RepresentationError(f"invalid JSON: {exc}") from None
        return cls.from_dict(d)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["vertex"] + [f"c{j}" for j in range(self.dim)])
        for v, row in enumerate(self.centers.tolist()):
            w.writerow([v] + [_encode(x) for x in row])
        return buf.getvalue()


@dataclass(frozen=True)
class Violation:
    kind: str          # "spurious_intersection" | "broken_edge"
    u: int
    v: int
    gap: Fraction | int
    coordinate: int | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "u": self.u, "v": self.v, "gap": _encode(self.gap), "coordinate": self.coordinate}

    def __str__(self) -> str:
        where = "" if self.coordinate is None else f" at coordinate {self.coordinate}"
        return f"{self.kind}: ({self.u}, {self.v}) gap {_encode(self.gap)}{where}"


# ----------------------------------------------------------------------
# graphs accepted by the verifiers


def graph_edges(graph) -> tuple[int, np.ndarray]:
    """``(n, edges)`` with edges as a sorted ``(m, 2)`` array of ``u < v``."""
    if isinstance(graph, RootedTree):
        v = np.arange(graph.n)
        v = v[v != graph.root]
        p = graph.parent[v]
        e = np.stack([np.minimum(p, v), np.maximum(p, v)], axis=1)
        n = graph.n
    else:
        n = graph.n
        pairs = [(min(a, b), max(a, b)) for a, b in graph.edges()]
        e = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(e):
        e = e[np.lexsort((e[:, 1], e[:, 0]))]
    return n, e


def _edge_keys(n: int, e: np.ndarray) -> np.ndarray:
    return e[:, 0] * n + e[:, 1]


def _make_violation(centers: np.ndarray, u: int, v: int, adjacent: bool) -> Violation:
    diff = centers[u] - centers[v]
    gap = _linf(diff[None, :])[0]
    if adjacent:
        coord = int(np.nonzero(np.abs(diff) > 1)[0][0])
        return Violation("broken_edge", u, v, gap, coord)
    return Violation("spurious_intersection", u, v, gap, None)


def verify_naive(graph, rep: CubeRepresentation) -> Violation | None:
    """Check every pair in lexicographic order; ``None`` means the law holds."""
    n, e = graph_edges(graph)
    if rep.n != n:
        raise RepresentationError(f"representation has {rep.n} centers for {n} vertices")
    c = rep.centers
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for a, b in e.tolist():
        nbrs[a].append(b)
    for u in range(n - 1):
        gaps = _linf(c[u + 1:] - c[u])
        adj = np.zeros(n - u - 1, dtype=bool)
        if nbrs[u]:
            adj[np.asarray(nbrs[u]) - u - 1] = True
        bad = np.nonzero(np.where(adj, gaps > 1, gaps <= 1))[0]
        if len(bad):
            v = u + 1 + int(bad[0])
            return _make_violation(c, u, v, bool(adj[bad[0]]))
    return None


def all_violations(graph, rep: CubeRepresentation) -> np.ndarray:
    """Every violating pair ``(u, v)``, ``u < v``, found via the spatial grid."""
    n, e = graph_edges(graph)
    if rep.n != n:
        raise RepresentationError(f"representation has {rep.n} centers for {n} vertices")
    c = rep.centers
    close = close_pairs(c)
    ekeys = _edge_keys(n, e)
    if len(close):
        ckeys = _edge_keys(n, close)
        spurious = close[~np.isin(ckeys, ekeys)]
    else:
        spurious = close
    if len(e):
        gaps = _linf(c[e[:, 0]] - c[e[:, 1]])
        broken = e[np.asarray(gaps > 1, dtype=bool)]
    else:
        broken = e
    out = np.concatenate([spurious, broken]) if len(broken) else spurious
    if len(out):
        out = out[np.lexsort((out[:, 1], out[:, 0]))]
    return out


def verify_spatial(graph, rep: CubeRepresentation, min_n: int = SPATIAL_MIN_N) -> Violation | None:
    """Same verdict and witness as ``verify_naive`` using grid candidate search.

    Inputs with fewer than ``min_n`` vertices go straight to the naive check.
    """
    n, e = graph_edges(graph)
    if n < min_n:
        return verify_naive(graph, rep)
    bad = all_violations(graph, rep)
    if len(bad) == 0:
        return None
    u, v = (int(x) for x in bad[0])
    ekeys = set(_edge_keys(n, e).tolist())
    return _make_violation(rep.centers, u, v, u * n + v in ekeys)


def verify(graph, rep: CubeRepresentation) -> Violation | None:
    return verify_spatial(graph, rep)


# ----------------------------------------------------------------------
# weights <-> centers


def prefix_sums(tree: RootedTree, weights: np.ndarray) -> np.ndarray:
    """S(v) = sum of weight rows on the root path of v (root row ignored)."""
    n, d = weights.shape
    if is_integral(weights):
        acc = np.int64 if d == 0 or int(np.abs(weights).max(initial=0)) * tree.height >= 2 ** 31 else np.int32
        diffs = np.zeros((n + 1, d), dtype=acc)
        w = weights.astype(acc)
    else:
        diffs = np.zeros((n + 1, d), dtype=object)
        diffs[:] = Fraction(0)
        w = weights
    nonroot = np.arange(n) != tree.root
    diffs[tree.tin[nonroot]] += w[nonroot]
    np.subtract.at(diffs, tree.tout[nonroot], w[nonroot])
    run = np.cumsum(diffs[:n], axis=0)
    return run[tree.tin]


def sums(W: WeightAssignment) -> np.ndarray:
    if not W.is_total:
        raise RepresentationError("weight assignment is partial")
    return prefix_sums(W.tree, W.weights)


def sum_vector(W: WeightAssignment, v: int) -> np.ndarray:
    tree = W.tree
    u = v
    while u != tree.root:
        if not W.defined[u]:
            raise RepresentationError(f"edge above {u} on the root path of {v} is undefined")
        u = int(tree.parent[u])
    return sums(W)[v] if W.is_total else _path_sum(W, v)


def _path_sum(W: WeightAssignment, v: int) -> np.ndarray:
    tree = W.tree
    acc = np.zeros(W.dim, dtype=W.weights.dtype)
    while v != tree.root:
        acc = acc + W.weights[v]
        v = int(tree.parent[v])
    return exact_array(acc) if W.dim else acc


def delta(W: WeightAssignment, u: int, v: int) -> np.ndarray:
    """S_W(u) - S_W(v) by telescoping the u-v path through the LCA."""
    tree = W.tree
    w = tree.lca(u, v)
    acc = np.zeros(W.dim, dtype=object)
    acc[:] = 0
    while u != w:
        acc = acc + W.edge(u)
        u = int(tree.parent[u])
    while v != w:
        acc = acc - W.edge(v)
        v = int(tree.parent[v])
    return exact_array(acc) if W.dim else np.zeros(0, dtype=np.int64)


def weights_to_centers(W: WeightAssignment, check: bool = False, meta: dict | None = None) -> CubeRepresentation:
    rep = CubeRepresentation(sums(W), W.blocks, dict(meta or {}))
    if check:
        bad = verify(W.tree, rep)
        if bad is not None:
            raise RepresentationError(f"weights are not separating: {bad}")
    return rep


def centers_to_weights(tree: RootedTree, rep: CubeRepresentation) -> WeightAssignment:
    """W(parent(v), v) = f(v) - f(parent(v)); fails on a broken edge."""
    if rep.n != tree.n:
        raise RepresentationError(f"representation has {rep.n} centers for {tree.n} vertices")
    c = rep.centers
    par = tree.parent.copy()
    par[tree.root] = tree.root
    w = c - c[par]
    if rep.dim:
        gaps = _linf(w)
        bad = np.nonzero(gaps > 1)[0]
        if len(bad):
            v = int(bad[0])
            raise RepresentationError(f"edge ({int(tree.parent[v])}, {v}) has gap {_encode(gaps[v])} > 1")
    return WeightAssignment.total(tree, w, rep.blocks)


# ----------------------------------------------------------------------
# block operations


def _block_names(parts: Sequence, names: Sequence[str] | None) -> list[str]:
    if names is None:
        return [f"b{i}" for i in range(len(parts))]
    if len(names) != len(parts):
        raise ValueError("one name per block is required")
    return list(names)


def concat(parts: Sequence, names: Sequence[str] | None = None, n: int | None = None):
    """Concatenate representations (or total weight assignments) coordinate-wise."""
    names = _block_names(parts, names)
    blocks, start = [], 0
    for name, p in zip(names, parts):
        blocks.append(Block(name, start, start + p.dim))
        start += p.dim
    if not parts:
        if n is None:
            raise ValueError("n is required to concatenate zero blocks")
        return CubeRepresentation(np.zeros((n, 0), dtype=np.int64), ())
    if all(isinstance(p, WeightAssignment) for p in parts):
        tree = parts[0].tree
        if any(p.tree is not tree for p in parts):
            raise RepresentationError("blocks refer to different trees")
        if not all(p.is_total for p in parts):
            raise RepresentationError("cannot concatenate partial weight assignments")
        w = np.concatenate([p.weights for p in parts], axis=1)
        return WeightAssignment.total(tree, w, tuple(blocks))
    if all(isinstance(p, CubeRepresentation) for p in parts):
        rows = {p.n for p in parts}
        if len(rows) != 1:
            raise RepresentationError("blocks have different vertex counts")
        c = np.concatenate([p.centers for p in parts], axis=1)
        return CubeRepresentation(exact_array(c) if c.dtype == object else c, tuple(blocks), dict(parts[0].meta))
    raise TypeError("concat needs all representations or all weight assignments")


def trim_dimensions(graph, rep: CubeRepresentation) -> CubeRepresentation:
    """Greedily drop coordinates (in index order) while verification stays Ok."""
    if verify(graph, rep) is not None:
        raise RepresentationError("cannot trim a representation that does not verify")
    keep = list(range(rep.dim))
    for j in range(rep.dim):
        trial = [c for c in keep if c != j]
        if verify(graph, rep.select(trial)) is None:
            keep = trial
    blocks = []
    for b in rep.blocks:
        inside = [c for c in keep if b.start <= c < b.stop]
        if inside:
            lo = keep.index(inside[0])
            blocks.append(Block(b.name, lo, lo + len(inside)))
    meta = dict(rep.meta)
    meta["trimmed_from"] = rep.dim
    out = rep.select(keep, tuple(blocks))
    return CubeRepresentation(out.centers, out.blocks, meta)
