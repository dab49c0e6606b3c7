from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings

from cubetree.tree import (
    RootedTree, TreeFormatError, format_edge_list, generate, parse_edge_list, parse_tree,
)

from conftest import bfs_distances, random_tree, trees


class TestParse:
    def test_single_edge(self):
        t = parse_tree("2\n0 1", root="preserve")
        assert t.n == 2 and t.height == 1

    def test_star_layout(self):
        t = parse_tree("4\n0 1\n0 2\n0 3", root="preserve")
        assert t.root == 0 and sorted(t.children[0]) == [1, 2, 3]

    def test_cycle_rejected(self):
        with pytest.raises(TreeFormatError, match="cycle"):
            parse_tree("4\n0 1\n1 2\n0 3\n2 3")

    def test_disconnected_rejected(self):
        with pytest.raises(TreeFormatError, match="disconnected"):
            parse_tree("4\n0 1\n2 3")

    def test_zero_vertices(self):
        with pytest.raises(TreeFormatError):
            parse_tree("0\n")

    @pytest.mark.parametrize("text", ["3\n0 1\n1", "3\n0 1\n1 x", "3\n0 1\n1 5", "3\n0 1\n1 1", "3\n0 1\n1 0"])
    def test_malformed(self, text):
        with pytest.raises(TreeFormatError):
            parse_tree(text)

    def test_comments_and_blank_lines(self):
        t = parse_tree("# a path\n3\n\n0 1  # first\n1 2\n", root="preserve")
        assert t.n == 3 and t.dist(0, 2) == 2

    def test_center_root_policy(self):
        t = parse_tree(format_edge_list(generate("path", n=7)))
        assert t.root == 3 and t.height == 3

    def test_round_trip_format(self):
        t = generate("random_pruefer", seed=4, n=50)
        n, edges = parse_edge_list(format_edge_list(t))
        assert n == 50 and sorted(map(tuple, map(sorted, edges))) == sorted(map(tuple, map(sorted, t.edges())))


class TestGenerate:
    def test_path(self):
        t = generate("path", n=4)
        assert t.n == 4 and t.height == 3 and t.root == 0

    def test_complete_binary(self):
        assert generate("complete_kary", arity=2, depth=3).n == 15

    def test_pruefer_determinism(self):
        a = format_edge_list(generate("random_pruefer", seed=7, n=100))
        b = format_edge_list(generate("random_pruefer", seed=7, n=100))
        assert a == b
        assert a != format_edge_list(generate("random_pruefer", seed=8, n=100))

    def test_caterpillar_and_broom(self):
        c = generate("caterpillar", spine=5, legs=2)
        assert c.n == 15 and c.height == 5
        b = generate("broom", handle=4, bristles=3)
        assert b.n == 7 and b.max_degree() == 4

    @pytest.mark.parametrize("kind,params", [("tree", {"n": 3}), ("path", {"n": 0}),
                                             ("complete_kary", {"arity": 1, "depth": 2})])
    def test_bad_parameters(self, kind, params):
        with pytest.raises(ValueError):
            generate(kind, **params)


class TestQueries:
    def test_path_examples(self):
        t = generate("path", n=4)
        assert t.dist(0, 3) == 3 and t.lca(1, 3) == 1

    def test_star_examples(self):
        t = generate("star", m=3)
        assert t.dist(1, 2) == 2 and t.lca(1, 2) == 0

    def test_identity(self):
        t = generate("random_pruefer", seed=1, n=30)
        for v in range(30):
            assert t.dist(v, v) == 0 and t.lca(v, v) == v

    def test_ball_sizes(self):
        t = generate("path", n=4)
        assert t.ball_size(0, 1) == 2
        assert t.ball_size(1, 2) == 4
        assert t.ball_size(2, 10) == 4

    def test_invalid_vertex(self):
        t = generate("path", n=4)
        with pytest.raises(IndexError):
            t.dist(0, 4)

    def test_is_path(self):
        assert generate("path", n=4).is_path()
        assert not generate("star", m=3).is_path()
        assert RootedTree(1, []).is_path()


@settings(max_examples=60, deadline=None)
@given(trees(max_n=80))
def test_structure_invariants(t):
    assert len(t.edges()) == t.n - 1
    for v in range(t.n):
        if v != t.root:
            assert t.depth[v] == t.depth[t.parent[v]] + 1
            assert t.tin[t.parent[v]] < t.tin[v] < t.tout[v] <= t.tout[t.parent[v]]
    assert t.depth[t.root] == 0
    assert t.subtree_sizes_consistent()
    for v in range(t.n):
        kids = sorted(t.children[v], key=lambda c: t.tin[c])
        for a, b in zip(kids, kids[1:]):
            assert t.tout[a] <= t.tin[b]


def test_lca_distances_match_bfs(rng):
    for _ in range(20):
        n = int(rng.integers(2, 501))
        t = random_tree(rng, n)
        ref = bfs_distances(n, t.edges())
        us, vs = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        got = t.dist_many(us.ravel(), vs.ravel()).reshape(n, n)
        assert np.array_equal(got, ref)


@settings(max_examples=40, deadline=None)
@given(trees(max_n=40))
def test_rerooting_preserves_distances(t):
    r = t.rerooted(t.center())
    for u in range(t.n):
        assert np.array_equal(t.dist_from(u), r.dist_from(u))
    assert r.height == (t.diameter() + 1) // 2
