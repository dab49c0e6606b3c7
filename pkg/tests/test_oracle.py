from __future__ import annotations

import itertools

import networkx as nx
import pytest

from cubetree.metrics import compute_rho
from cubetree.oracle import (
    OracleError, SmallGraph, cover_witness, exact_cubicity, is_unit_interval, parse_graph,
    proper_interval_supergraphs, rooted_canonical, rooted_classes,
)
from cubetree.tree import RootedTree, generate

from conftest import random_tree


def complete(n):
    return SmallGraph.from_edges(n, itertools.combinations(range(n), 2))


def free_trees(n):
    if n == 1:
        return [RootedTree(1, [])]
    return [RootedTree(n, list(t.edges())) for t in nx.nonisomorphic_trees(n)]


def brute_unit_interval(g: SmallGraph) -> bool:
    """Umbrella ordering search straight from the definition."""
    for order in itertools.permutations(range(g.n)):
        ok = True
        for a, b, c in itertools.combinations(range(g.n), 3):
            u, v, w = order[a], order[b], order[c]
            if g.has_edge(u, w) and not (g.has_edge(u, v) and g.has_edge(v, w)):
                ok = False
                break
        if ok:
            return True
    return False


class TestSupergraphs:
    def test_p3_includes_itself(self):
        g = SmallGraph.from_edges(3, [(0, 1), (1, 2)])
        assert g in proper_interval_supergraphs(g)

    def test_claw(self):
        g = generate("star", m=3)
        sg = SmallGraph.from_tree(g)
        sup = proper_interval_supergraphs(sg)
        assert sg not in sup and complete(4) in sup

    def test_all_are_supersets(self, rng):
        for _ in range(5):
            g = SmallGraph.from_tree(random_tree(rng, 5))
            for h in proper_interval_supergraphs(g):
                assert h.contains(g)

    def test_all_unit_interval_supersets_found(self):
        # every superset of E(P_4) that is unit interval must be enumerated
        g = SmallGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
        nonedges = g.non_edges()
        want = set()
        for k in range(len(nonedges) + 1):
            for extra in itertools.combinations(nonedges, k):
                h = SmallGraph.from_edges(4, g.edges() + list(extra))
                if brute_unit_interval(h):
                    want.add(h)
        assert set(proper_interval_supergraphs(g)) == want

    def test_unit_interval_recognition(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 6))
            edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.5]
            g = SmallGraph.from_edges(n, edges)
            assert is_unit_interval(g) == brute_unit_interval(g)

    def test_size_cap(self):
        with pytest.raises(OracleError):
            proper_interval_supergraphs(complete(9))


class TestCubicity:
    @pytest.mark.parametrize("k", range(3, 8))
    def test_paths(self, k):
        assert exact_cubicity(generate("path", n=k)) == 1

    @pytest.mark.parametrize("m,want", [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (6, 3)])
    def test_stars(self, m, want):
        assert exact_cubicity(generate("star", m=m)) == want

    def test_complete(self):
        assert exact_cubicity(complete(5)) == 0

    def test_cycle(self):
        # C_4 is not unit interval; two unit interval graphs suffice
        assert exact_cubicity(SmallGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])) == 2

    def test_witness_intersects_exactly(self):
        g = SmallGraph.from_tree(generate("star", m=5))
        parts = cover_witness(g, 3)
        assert len(parts) == 3
        inter = tuple(a & b & c for a, b, c in zip(*(h.adj for h in parts)))
        assert inter == g.adj
        assert cover_witness(g, 2) is None

    def test_eight_needs_flag(self):
        t = generate("star", m=7)
        with pytest.raises(OracleError):
            exact_cubicity(t)
        assert exact_cubicity(t, allow_8=True) == 3

    def test_golden_small_trees(self):
        # sum of cubicities over free trees of each order (regression values)
        totals = {n: sum(exact_cubicity(t) for t in free_trees(n)) for n in range(1, 8)}
        assert totals == {1: 0, 2: 0, 3: 1, 4: 3, 5: 5, 6: 12, 7: 23}

    def test_adding_a_leaf_never_decreases(self):
        for n in range(2, 7):
            for t in free_trees(n):
                base = exact_cubicity(t)
                for v in range(n):
                    bigger = RootedTree(n + 1, t.edges() + [(v, n)])
                    assert exact_cubicity(bigger) >= base


class TestParseGraph:
    def test_triangle(self):
        g = parse_graph("3\n0 1\n1 2\n0 2\n")
        assert g.is_complete()

    def test_errors(self):
        with pytest.raises(ValueError):
            parse_graph("3\n0 1\n0 1\n")
        with pytest.raises(ValueError):
            parse_graph("9\n0 1\n")


class TestRootedClasses:
    def test_counts(self):
        counts = [len(rooted_classes(free_trees(n))) for n in range(1, 8)]
        assert counts == [1, 1, 2, 4, 9, 20, 48]

    def test_canonical_invariant_under_relabel(self, rng):
        t = random_tree(rng, 12)
        perm = rng.permutation(12)
        relabelled = RootedTree(12, [(int(perm[a]), int(perm[b])) for a, b in t.edges()], root=int(perm[t.root]))
        assert rooted_canonical(t) == rooted_canonical(relabelled)

    def test_ceil_rho_below_cubicity(self):
        for n in range(2, 8):
            for t in free_trees(n):
                assert compute_rho(t).ceil <= exact_cubicity(t)
