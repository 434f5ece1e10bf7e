import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distmincut.generators import clique_path, planted_cut, random_connected
from distmincut.graph import (
    GraphFormatError,
    GraphValidationError,
    VertexSide,
    WeightedMultigraph,
    complement,
    cut_weight,
    diameter,
    graph_to_text,
    is_connected,
    load_graph,
    sample_subgraph,
    save_graph,
)
from distmincut.rng import stream


def k3() -> WeightedMultigraph:
    return WeightedMultigraph.build(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])


class TestLoad:
    def test_triangle(self, tmp_path):
        p = tmp_path / "k3.txt"
        p.write_text("p 3 3\n0 1 1\n1 2 1\n0 2 1\n")
        g = load_graph(p)
        assert g.n == 3 and g.m_multi == 3
        assert g.edges == ((0, 1, 1), (0, 2, 1), (1, 2, 1))

    def test_self_loop_rejected(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("p 2 1\n0 0 1\n")
        with pytest.raises(GraphValidationError, match="self-loop"):
            load_graph(p)

    def test_disconnected_rejected(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("p 4 2\n0 1 1\n2 3 1\n")
        with pytest.raises(GraphValidationError, match="not connected"):
            load_graph(p)

    def test_header_mismatch(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("p 3 5\n0 1 1\n1 2 1\n")
        with pytest.raises(GraphFormatError):
            load_graph(p)

    def test_weight_out_of_range(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("p 2 1\n0 1 0\n")
        with pytest.raises(GraphValidationError, match="weight"):
            load_graph(p)

    def test_arbitrary_labels_remapped(self, tmp_path):
        p = tmp_path / "labels.txt"
        p.write_text("p 3 3\n10 20 1\n20 37 1\n10 37 2\n")
        g = load_graph(p)
        assert g.n == 3 and g.original_labels == (10, 20, 37)
        assert g.m_multi == 4

    def test_round_trip_canonical(self, tmp_path):
        # duplicate pairs merge, edges sort, labels densify: then fixpoint
        p = tmp_path / "messy.txt"
        p.write_text("# comment\np 4 5\n2 1 1\n0 1 1\n1 2 2\n3 0 1\n2 3 1\n")
        g = load_graph(p)
        out1 = tmp_path / "c1.txt"
        save_graph(g, out1)
        g2 = load_graph(out1)
        out2 = tmp_path / "c2.txt"
        save_graph(g2, out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_planted_sidecar_round_trip(self, tmp_path):
        g = planted_cut(4, 4, c=2, seed=1)
        p = tmp_path / "planted.txt"
        save_graph(g, p)
        g2 = load_graph(p)
        assert g2.planted_weight == 2
        assert g2.planted_side == frozenset(range(4))
        assert graph_to_text(g) == graph_to_text(g2)


class TestGenerators:
    def test_planted_metadata_and_min_cut(self):
        g = planted_cut(10, 10, c=3, seed=7)
        side = VertexSide.of(g.planted_side, g.n)
        assert cut_weight(g, side) == 3
        # every other cut severs at least 9 internal clique edges
        from distmincut.oracle import stoer_wagner

        assert stoer_wagner(g).weight == 3

    def test_planted_infeasible(self):
        with pytest.raises(GraphValidationError):
            planted_cut(10, 10, c=0)
        with pytest.raises(GraphValidationError):
            planted_cut(3, 3, c=2)  # crossing weight must stay below degree

    def test_clique_path_shape(self):
        g = clique_path(4, 5)
        assert g.n == 20
        assert diameter(g) >= 5  # grows with the chain length

    def test_random_connected_is_connected(self):
        g = random_connected(16, extra_edges=10, seed=1)
        assert g.n == 16 and is_connected(g)

    def test_generator_determinism(self):
        a = planted_cut(6, 7, c=2, seed=5)
        b = planted_cut(6, 7, c=2, seed=5)
        assert a.edges == b.edges


class TestSampling:
    def test_p_one_keeps_everything(self):
        g = planted_cut(5, 5, c=2, seed=0)
        s = sample_subgraph(g, 1.0, seed=9)
        assert s.multiplicity == tuple(w for _, _, w in g.edges)

    def test_keep_rate_single_unit_edge(self):
        # one unit edge, many seeds: empirical keep-rate 0.5 +- 0.01
        g = WeightedMultigraph.build(2, [(0, 1, 1)])
        keeps = sum(
            sample_subgraph(g, 0.5, seed=s).multiplicity[0] for s in range(100_000)
        )
        assert abs(keeps / 100_000 - 0.5) < 0.01

    def test_deterministic_replay(self):
        g = k3()
        a = sample_subgraph(g, 0.5, seed=123)
        b = sample_subgraph(g, 0.5, seed=123)
        assert a.multiplicity == b.multiplicity

    def test_total_bounded(self):
        g = planted_cut(5, 5, c=2, seed=0)
        for s in range(20):
            samp = sample_subgraph(g, 0.7, seed=s)
            assert samp.total <= g.m_multi
        assert sample_subgraph(g, 1.0, seed=0).total == g.m_multi

    def test_expected_sampled_weight(self):
        # 50-edge instance: mean sampled multiplicity within 1% of p*m_multi
        g = random_connected(30, extra_edges=21, seed=4, max_weight=5)
        assert g.m == 50
        p = 0.6
        totals = [sample_subgraph(g, p, seed=s).total for s in range(10_000)]
        assert abs(np.mean(totals) / (p * g.m_multi) - 1.0) < 0.01

    def test_bad_probability(self):
        with pytest.raises(ValueError):
            sample_subgraph(k3(), 0.0, seed=0)


class TestCutWeight:
    def test_k3_single_vertex(self):
        assert cut_weight(k3(), VertexSide.of({0}, 3)) == 2

    def test_planted_side(self):
        g = planted_cut(10, 10, c=3, seed=7)
        assert cut_weight(g, VertexSide.of(g.planted_side, g.n)) == 3

    def test_path_split(self):
        g = WeightedMultigraph.build(3, [(0, 1, 1), (1, 2, 1)])
        assert cut_weight(g, VertexSide.of({0, 2}, 3)) == 2

    def test_empty_side_rejected(self):
        with pytest.raises(GraphValidationError):
            VertexSide.of(set(), 3)
        with pytest.raises(GraphValidationError):
            VertexSide.of({0, 1, 2}, 3)

    @given(st.integers(0, 2**30), st.integers(4, 24), st.integers(0, 40))
    @settings(max_examples=60, deadline=None)
    def test_complement_symmetry(self, seed, n, extra):
        g = random_connected(n, extra_edges=extra, seed=seed)
        rng = random.Random(seed)
        members = {v for v in range(n) if rng.random() < 0.5}
        if not members or len(members) == n:
            members = {0}
        side = VertexSide.of(members, n)
        assert cut_weight(g, side) == cut_weight(g, complement(side, n))


def test_named_streams_are_independent_and_stable():
    a = stream(1, "x").integers(0, 2**32, 4).tolist()
    b = stream(1, "x").integers(0, 2**32, 4).tolist()
    c = stream(1, "y").integers(0, 2**32, 4).tolist()
    assert a == b and a != c
