from __future__ import annotations

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubetree.embedder import EmbedConfig, embed_tree
from cubetree.oracle import SmallGraph
from cubetree.representation import (
    Block, CubeRepresentation, RepresentationError, WeightAssignment, centers_to_weights, concat, delta,
    exact_array, sum_vector, sums, trim_dimensions, verify_naive, verify_spatial, weights_to_centers,
)
from cubetree.spatial import close_pairs
from cubetree.tree import generate

from conftest import random_tree, trees


def frac_array(rows):
    a = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, r in enumerate(rows):
        a[i] = [F(x) for x in r]
    return exact_array(a)


def p3_weights(a, b):
    t = generate("path", n=3)
    return WeightAssignment.from_edges(t, {1: [a], 2: [b]}, 1)


def brute_violation(n, edges, c):
    """First lexicographic violating pair by direct enumeration with Fractions."""
    es = {(min(u, v), max(u, v)) for u, v in edges}
    for u in range(n):
        for v in range(u + 1, n):
            gap = max((abs(F(c[u][k]) - F(c[v][k])) for k in range(len(c[u]))), default=F(0))
            if ((u, v) in es) != (gap <= 1):
                return u, v
    return None


class TestSums:
    def test_p3_increasing(self):
        assert sums(p3_weights(1, 1)).ravel().tolist() == [0, 1, 2]

    def test_p3_back(self):
        W = p3_weights(1, -1)
        assert sums(W).ravel().tolist() == [0, 1, 0]
        assert sum_vector(W, 2).tolist() == [0]

    def test_root_zero(self, rng):
        t = random_tree(rng, 40)
        W = WeightAssignment.total(t, rng.integers(-1, 2, (40, 5)))
        assert not sums(W)[t.root].any()

    def test_partial_rejected(self):
        t = generate("path", n=3)
        W = WeightAssignment.from_edges(t, {1: [1]}, 1)
        with pytest.raises(RepresentationError):
            sum_vector(W, 2)

    def test_entries_bounded(self):
        t = generate("path", n=3)
        with pytest.raises(RepresentationError):
            WeightAssignment.from_edges(t, {1: [2], 2: [0]}, 1)


class TestDelta:
    def test_examples(self):
        W = p3_weights(1, 1)
        assert delta(W, 2, 0).tolist() == [2]
        assert delta(W, 1, 1).tolist() == [0]

    @settings(max_examples=40, deadline=None)
    @given(trees(min_n=2, max_n=40), st.integers(0, 2**32 - 1))
    def test_telescoping_matches_prefix_sums(self, t, seed):
        g = np.random.default_rng(seed)
        W = WeightAssignment.total(t, g.integers(-1, 2, (t.n, 3)))
        S = sums(W)
        for _ in range(20):
            u, v = (int(x) for x in g.integers(0, t.n, 2))
            assert np.array_equal(delta(W, u, v), S[u] - S[v])

    @settings(max_examples=30, deadline=None)
    @given(trees(min_n=2, max_n=40), st.integers(0, 2**32 - 1))
    def test_edges_never_break(self, t, seed):
        g = np.random.default_rng(seed)
        vals = g.integers(-4, 5, (t.n, 4))
        W = WeightAssignment.total(t, frac_array([[F(int(x), 4) for x in r] for r in vals]))
        S = sums(W)
        for p, c in t.edges():
            assert max(abs(x) for x in (S[p] - S[c]).tolist()) <= 1


class TestConversion:
    def test_p3_valid(self):
        rep = weights_to_centers(p3_weights(1, 1), check=True)
        assert rep.centers.ravel().tolist() == [0, 1, 2]

    def test_p3_invalid(self):
        with pytest.raises(RepresentationError):
            weights_to_centers(p3_weights(1, -1), check=True)

    def test_k2_any(self):
        t = generate("path", n=2)
        W = WeightAssignment.from_edges(t, {1: [-1, 1]}, 2)
        assert verify_naive(t, weights_to_centers(W)) is None

    def test_centers_to_weights(self):
        t = generate("path", n=3)
        W = centers_to_weights(t, CubeRepresentation(np.array([[0], [1], [2]])))
        assert W.weights[1:].ravel().tolist() == [1, 1]
        W2 = centers_to_weights(t, CubeRepresentation(np.array([[5], [6], [7]])))
        assert np.array_equal(W.weights, W2.weights)

    def test_broken_edge_rejected(self):
        t = generate("path", n=3)
        with pytest.raises(RepresentationError, match="gap"):
            centers_to_weights(t, CubeRepresentation(np.array([[0], [2], [3]])))


class TestVerify:
    claw = generate("star", m=3)

    def test_rational_ok(self):
        rep = CubeRepresentation(frac_array([["3/4", "3/4"], [0, 0], ["3/2", 0], [0, "3/2"]]))
        assert verify_naive(self.claw, rep) is None

    def test_gap_exactly_one_intersects(self):
        rep = CubeRepresentation(frac_array([["3/4", "3/4"], [0, 0], [1, 0], [0, "3/2"]]))
        bad = verify_naive(self.claw, rep)
        assert bad.kind == "spurious_intersection" and (bad.u, bad.v) == (1, 2) and bad.gap == 1

    def test_dim0_k2(self):
        t = generate("path", n=2)
        assert verify_naive(t, CubeRepresentation(np.zeros((2, 0), dtype=np.int64))) is None

    def test_broken_edge_witness(self):
        t = generate("path", n=3)
        bad = verify_naive(t, CubeRepresentation(np.array([[0, 0], [0, 2], [0, 3]])))
        assert bad.kind == "broken_edge" and (bad.u, bad.v) == (0, 1) and bad.coordinate == 1

    def test_violation_reproduces(self, rng):
        for _ in range(30):
            t = random_tree(rng, 30)
            rep = CubeRepresentation(rng.integers(-2, 3, (30, 2)))
            bad = verify_naive(t, rep)
            if bad is None:
                continue
            gap = np.abs(rep.centers[bad.u] - rep.centers[bad.v]).max()
            assert gap == bad.gap
            assert (bad.kind == "broken_edge") == t.is_adjacent(bad.u, bad.v)

    def test_matches_brute_force(self, rng):
        for _ in range(40):
            t = random_tree(rng, int(rng.integers(2, 25)))
            c = rng.integers(-3, 4, (t.n, 3))
            bad = verify_naive(t, CubeRepresentation(c))
            want = brute_violation(t.n, t.edges(), c.tolist())
            assert (None if bad is None else (bad.u, bad.v)) == want

    def test_general_graph(self):
        g = SmallGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        assert verify_naive(g, CubeRepresentation(np.zeros((3, 0), dtype=np.int64))) is None

    def test_spatial_equivalence_random(self, rng):
        for i in range(150):
            t = random_tree(rng, int(rng.integers(2, 120)))
            c = rng.integers(-3, 4, (t.n, int(rng.integers(1, 6))))
            rep = CubeRepresentation(c)
            assert verify_spatial(t, rep, min_n=0) == verify_naive(t, rep)

    def test_spatial_on_pipeline_output(self):
        t = generate("random_pruefer", seed=1, n=2000)
        rep, _ = embed_tree(t, EmbedConfig(mode="scaled:16", seed=2))
        assert verify_spatial(t, rep) is None


class TestClosePairs:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 50), st.integers(1, 6), st.integers(0, 3), st.booleans(), st.integers(0, 2**32 - 1))
    def test_against_all_pairs(self, n, d, grid, grouped, seed):
        g = np.random.default_rng(seed)
        pts = g.integers(-3, 4, (n, d))
        groups = g.integers(0, 3, n) if grouped else None
        want = [(u, v) for u in range(n) for v in range(u + 1, n)
                if np.abs(pts[u] - pts[v]).max() <= 1 and (groups is None or groups[u] == groups[v])]
        assert [tuple(p) for p in close_pairs(pts, groups, grid_dims=grid).tolist()] == want

    def test_fractions(self, rng):
        vals = rng.integers(-6, 7, (40, 3))
        pts = frac_array([[F(int(x), 2) for x in r] for r in vals])
        want = [(u, v) for u in range(40) for v in range(u + 1, 40)
                if max(abs(a - b) for a, b in zip(pts[u], pts[v])) <= 1]
        assert [tuple(p) for p in close_pairs(pts).tolist()] == want


class TestFileFormat:
    def test_json_round_trip_integer(self):
        rep = CubeRepresentation(np.array([[0, 1], [2, -3]]), (Block("A0", 0, 2),), {"seed": 4, "mode": "faithful", "t": 2})
        back = CubeRepresentation.from_json(rep.to_json())
        assert back.equals(rep) and back.blocks == rep.blocks and back.meta["seed"] == 4

    def test_json_rationals(self):
        rep = CubeRepresentation(frac_array([["1/2", 0], ["-3/4", 1]]))
        text = rep.to_json()
        assert '"1/2"' in text
        assert CubeRepresentation.from_json(text).equals(rep)

    def test_shape_mismatch(self):
        with pytest.raises(RepresentationError):
            CubeRepresentation.from_json('{"n": 2, "dim": 1, "centers": [[0]]}')

    def test_float_rejected(self):
        with pytest.raises(RepresentationError):
            CubeRepresentation.from_json('{"n": 1, "dim": 1, "centers": [[0.5]]}')

    def test_csv(self):
        text = CubeRepresentation(np.array([[0, 1], [2, 3]])).to_csv()
        assert text.splitlines() == ["vertex,c0,c1", "0,0,1", "1,2,3"]


class TestBlocks:
    def test_concat_two_paths(self):
        t = generate("path", n=3)
        a = CubeRepresentation(np.array([[0], [1], [2]]))
        b = CubeRepresentation(np.array([[0], [1], [0]]))
        c = concat([a, b], ["x", "y"])
        assert c.dim == 2 and [bl.name for bl in c.blocks] == ["x", "y"]
        assert verify_naive(t, c) is None

    def test_concat_empty(self):
        assert concat([], n=3).dim == 0

    def test_concat_weights_four_blocks(self, rng):
        t = random_tree(rng, 10)
        parts = [WeightAssignment.total(t, rng.integers(-1, 2, (10, 3))) for _ in range(4)]
        W = concat(parts, ["A0", "B0", "A0'", "B0'"])
        assert W.dim == 12 and [b.start for b in W.blocks] == [0, 3, 6, 9]

    def test_concat_partial_rejected(self):
        t = generate("path", n=3)
        with pytest.raises(RepresentationError):
            concat([WeightAssignment.from_edges(t, {1: [1]}, 1)])

    def test_trim_drops_zero_column(self):
        t = generate("star", m=3)
        base = frac_array([["3/4", "3/4", 0], [0, 0, 0], ["3/2", 0, 0], [0, "3/2", 0]])
        out = trim_dimensions(t, CubeRepresentation(base))
        assert out.dim == 2 and verify_naive(t, out) is None

    def test_trim_minimal_unchanged(self):
        t = generate("path", n=3)
        rep = CubeRepresentation(np.array([[0], [1], [2]]))
        assert trim_dimensions(t, rep).equals(rep)

    def test_trim_requires_valid(self):
        t = generate("path", n=3)
        with pytest.raises(RepresentationError):
            trim_dimensions(t, CubeRepresentation(np.zeros((3, 1), dtype=np.int64)))

    def test_trim_star8_pipeline(self):
        t = generate("star", m=8)
        rep, _ = embed_tree(t, EmbedConfig(seed=1))
        assert rep.dim == 136
        out = trim_dimensions(t, rep)
        assert out.dim < 136 and verify_naive(t, out) is None
