"""Height ladder and depth-threshold decompositions of a rooted tree.

The ladder runs ``h_0 = 2^(2^k) >= h`` down by repeated square roots to 2.
At level ``i`` the tree is cut between depths ``j`` and ``j + 1`` for every
``j`` in a residue class modulo ``3 h_i``: offset 0 (family A, positive
multiples only) or offset ``h_i`` (family B).  The cut edge is the parent
edge of each vertex at depth ``j + 1``, and that vertex becomes a piece root.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .tree import RootedTree

FAITHFUL_BASE = 1 << 16


def _is_pow2(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


@dataclass(frozen=True)
class Ladder:
    h: int
    k: int
    gamma: int
    heights: tuple[int, ...]   # heights[i] = h_i
    base: int
    e: int
    o: int | None              # missing when the ladder has a single level

    @property
    def top(self) -> int:
        return max(self.e, self.o if self.o is not None else 0)

    @property
    def rounds(self) -> int:
        """Number of extension rounds the pipeline performs."""
        return self.top - 1 if self.top >= 2 else 0

    def height(self, i: int) -> int | None:
        return self.heights[i] if 0 <= i < len(self.heights) else None

    def to_dict(self) -> dict:
        return {"h": self.h, "k": self.k, "gamma": self.gamma, "heights": list(self.heights),
                "base": self.base, "e": self.e, "o": self.o, "rounds": self.rounds}


def build_ladder(h: int, base: int = FAITHFUL_BASE) -> Ladder:
    """Ladder for a tree of height ``h`` with base-case threshold ``base``."""
    if not _is_pow2(base) or base < 4:
        raise ValueError(f"base height must be a power of two >= 4, got {base}")
    h = max(int(h), 1)
    k = 0
    while (1 << (1 << k)) < h:
        k += 1
    heights = tuple(1 << (1 << (k - i)) for i in range(k + 1))

    def first(parity: int) -> int | None:
        for i in range(parity, k + 1, 2):
            if heights[i] <= base:
                return i
        return None

    e = first(0)
    o = first(1)
    assert e is not None  # h_k = 2 or h_{k-1} = 4 is always <= base
    return Ladder(h, k, heights[0], heights, base, e, o)


@dataclass(frozen=True)
class LevelFamilies:
    """Pieces of one family at one level.

    ``piece_of[v]`` is the index of the piece containing ``v``; pieces are
    numbered by the preorder position of their roots.  ``cut[v]`` marks the
    tree edge above ``v`` as removed.
    """
    tree: RootedTree
    level: int | None
    mode: str
    h_i: int | None
    piece_of: np.ndarray
    roots: np.ndarray
    cut: np.ndarray

    @property
    def count(self) -> int:
        return len(self.roots)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.piece_of, minlength=self.count)

    @cached_property
    def heights(self) -> np.ndarray:
        """Height of each piece measured from its own root."""
        rel = self.tree.depth - self.tree.depth[self.roots[self.piece_of]]
        out = np.zeros(self.count, dtype=np.int64)
        np.maximum.at(out, self.piece_of, rel)
        return out

    @cached_property
    def members(self) -> list[np.ndarray]:
        """Vertices of each piece in preorder."""
        order = self.tree.order
        ids = self.piece_of[order]
        srt = np.argsort(ids, kind="stable")
        bounds = np.searchsorted(ids[srt], np.arange(self.count + 1))
        grouped = order[srt]
        return [grouped[bounds[p]: bounds[p + 1]] for p in range(self.count)]

    def edges_in(self, p: int) -> np.ndarray:
        """Child endpoints of the tree edges inside piece ``p``."""
        m = self.members[p]
        return m[m != self.roots[p]]

    def cut_edges(self) -> np.ndarray:
        """Child endpoints of the edges of O_i."""
        return np.nonzero(self.cut)[0]

    def ranges(self, p: int) -> list[tuple[int, int]]:
        """Piece ``p`` as sorted half-open preorder ranges."""
        tree = self.tree
        r = int(self.roots[p])
        lo, hi = int(tree.tin[r]), int(tree.tout[r])
        inner = [int(c) for c in self.roots if c != r and lo < tree.tin[c] < hi]
        # keep only the topmost nested roots
        holes = sorted((int(tree.tin[c]), int(tree.tout[c])) for c in inner
                       if self.piece_of[tree.parent[c]] == p)
        out, cur = [], lo
        for a, b in holes:
            if a > cur:
                out.append((cur, a))
            cur = b
        if cur < hi:
            out.append((cur, hi))
        return out

    def same_piece(self, u: int, v: int) -> bool:
        return bool(self.piece_of[u] == self.piece_of[v])

    def dump(self) -> str:
        lines = []
        lvl = "-" if self.level is None else str(self.level)
        for p in range(self.count):
            lines.append(f"{lvl} {self.mode} root={int(self.roots[p])} size={int(self.sizes[p])} "
                         f"height={int(self.heights[p])}")
        return "\n".join(lines) + ("\n" if lines else "")


def _cut_mask(tree: RootedTree, h_i: int | None, mode: str) -> np.ndarray:
    if mode not in ("A", "B"):
        raise ValueError(f"family mode must be 'A' or 'B', got {mode!r}")
    cut = np.zeros(tree.n, dtype=bool)
    if h_i is None:
        return cut
    if h_i < 1:
        raise ValueError("h_i must be >= 1")
    j = tree.depth - 1
    period = 3 * h_i
    if mode == "A":
        cut = (j > 0) & (j % period == 0)
    else:
        cut = (j >= 0) & (j % period == h_i % period)
    cut[tree.root] = False
    return cut


def families_from_cut(tree: RootedTree, cut: np.ndarray, level: int | None, mode: str,
                      h_i: int | None) -> LevelFamilies:
    is_root = cut.copy()
    is_root[tree.root] = True
    root_of = np.empty(tree.n, dtype=np.int64)
    parent = tree.parent.tolist()
    flags = is_root.tolist()
    ro = [0] * tree.n
    for v in tree.order.tolist():
        ro[v] = v if flags[v] else ro[parent[v]]
    root_of[:] = ro
    roots = tree.order[is_root[tree.order]]
    index = np.empty(tree.n, dtype=np.int64)
    index[roots] = np.arange(len(roots))
    return LevelFamilies(tree, level, mode, h_i, index[root_of], roots, cut)


def decompose(tree: RootedTree, h_i: int | None, mode: str, level: int | None = None) -> LevelFamilies:
    """Cut ``tree`` at depth period ``3 h_i``; ``h_i=None`` yields the single piece ``{T}``."""
    return families_from_cut(tree, _cut_mask(tree, h_i, mode), level, mode, h_i)


def families(tree: RootedTree, ladder: Ladder, level: int | None, mode: str) -> LevelFamilies:
    """Family ``mode`` at ladder ``level``; a level absent from the ladder gives ``{T}``."""
    h_i = ladder.height(level) if level is not None else None
    return decompose(tree, h_i, mode, level)


# ----------------------------------------------------------------------
# structural checks


def cover_pair_check(fam_a: LevelFamilies, fam_b: LevelFamilies, u: int, v: int) -> bool:
    """Whether some piece of A or B contains both ``u`` and ``v``.

    Requires ``dist(u, v) <= h_i`` for the shared level.
    """
    h_i = fam_a.h_i
    if h_i is not None and fam_a.tree.dist(u, v) > h_i:
        raise ValueError("pair is farther apart than h_i")
    return fam_a.same_piece(u, v) or fam_b.same_piece(u, v)


def cover_pairs(fam_a: LevelFamilies, fam_b: LevelFamilies, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    return (fam_a.piece_of[us] == fam_a.piece_of[vs]) | (fam_b.piece_of[us] == fam_b.piece_of[vs])


def is_nested(finer: LevelFamilies, coarser: LevelFamilies) -> bool:
    """Every piece of ``finer`` lies inside one piece of ``coarser`` and the cut sets are nested."""
    if np.any(coarser.cut & ~finer.cut):
        return False
    lab = coarser.piece_of[finer.roots][finer.piece_of]
    return bool(np.all(lab == coarser.piece_of))


def is_partition(fam: LevelFamilies) -> bool:
    return int(fam.sizes.sum()) == fam.tree.n and bool(np.all(fam.sizes > 0))


def edge_accounting(fam: LevelFamilies) -> bool:
    return int((fam.sizes - 1).sum()) + int(fam.cut.sum()) == fam.tree.n - 1


def max_piece_height_ok(fam: LevelFamilies) -> bool:
    if fam.h_i is None:
        return True
    return bool(np.all(fam.heights <= 3 * fam.h_i))
