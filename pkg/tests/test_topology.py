import pytest
from hypothesis import given, settings, strategies as st

from dagprop import topology as topo
from dagprop.errors import (
    CodeCutViolation,
    CodeDimension,
    CyclicOrBackwardEdge,
    DeadLayer,
    TopologyError,
)

CROSS_EDGES = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (2, 4)]


class TestValidate:
    def test_minimal_skip(self):
        t = topo.validate([2, 3, 1], [(0, 1), (1, 2), (0, 2)])
        assert t.depth == 2
        assert t.skip_edges == ((0, 2),)
        assert t.incoming(2) == [(0, 2), (1, 2)]

    def test_backward_edge(self):
        with pytest.raises(CyclicOrBackwardEdge):
            topo.validate([2, 3, 1], [(0, 1), (2, 1)])

    def test_self_loop(self):
        with pytest.raises(CyclicOrBackwardEdge):
            topo.validate([2, 2], [(0, 1), (1, 1)])

    def test_crossencoder_valid(self):
        t = topo.validate([4, 3, 2, 3, 4], CROSS_EDGES, code_layer=2)
        assert t.code_layer == 2
        assert t.n_weights == 12 + 6 + 6 + 12 + 8 + 8

    def test_cut_violation(self):
        with pytest.raises(CodeCutViolation):
            topo.validate([4, 3, 2, 3, 4], CROSS_EDGES + [(1, 3)], code_layer=2)

    def test_dead_layers(self):
        with pytest.raises(DeadLayer):
            topo.validate([2, 3, 1], [(0, 2)])
        with pytest.raises(DeadLayer):
            topo.validate([2, 3, 1], [(0, 2), (0, 1)])

    def test_code_dimension(self):
        with pytest.raises(CodeDimension):
            topo.validate([4, 4, 4], [(0, 1), (1, 2)], code_layer=1)
        with pytest.raises(CodeDimension):
            topo.validate([4, 2, 3], [(0, 1), (1, 2)], code_layer=1)
        with pytest.raises(CodeDimension):
            topo.validate([4, 2, 4], [(0, 1), (1, 2)], code_layer=2)

    @pytest.mark.parametrize("widths", [[3], [3, 0, 1], []])
    def test_bad_widths(self, widths):
        with pytest.raises(TopologyError):
            topo.validate(widths, [(0, 1)])

    def test_out_of_range_edge(self):
        with pytest.raises(TopologyError):
            topo.validate([2, 2], [(0, 1), (0, 5)])


class TestSequentialCounterpart:
    def test_crossencoder(self):
        t = topo.validate([4, 3, 2, 3, 4], CROSS_EDGES, code_layer=2)
        s = topo.sequential_counterpart(t)
        assert s.layer_widths == (4, 3, 2, 3, 4)
        assert s.edges == ((0, 1), (1, 2), (2, 3), (3, 4))
        assert s.code_layer == 2

    def test_idempotent(self):
        s = topo.chain([3, 2, 3])
        assert topo.sequential_counterpart(s) == s

    def test_skip_removed(self):
        t = topo.validate([2, 3, 1], [(0, 1), (1, 2), (0, 2)])
        assert topo.sequential_counterpart(t).edges == ((0, 1), (1, 2))


@st.composite
def layered_dags(draw):
    n = draw(st.integers(2, 6))
    widths = draw(st.lists(st.integers(1, 5), min_size=n, max_size=n))
    pairs = [(i, j) for j in range(1, n) for i in range(j)]
    edges = set(draw(st.lists(st.sampled_from(pairs), max_size=len(pairs))))
    edges |= {(i, i + 1) for i in range(n - 1)}
    return widths, sorted(edges)


class TestSerialization:
    @given(layered_dags())
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, raw):
        t = topo.validate(*raw)
        assert topo.loads(t.serialize()) == t
        assert topo.loads(t.serialize()).fingerprint() == t.fingerprint()

    def test_edge_order_irrelevant(self):
        a = topo.validate([2, 3, 1], [(0, 1), (1, 2), (0, 2)])
        b = topo.validate([2, 3, 1], [(0, 2), (1, 2), (0, 1), (0, 1)])
        assert a == b and a.fingerprint() == b.fingerprint()

    def test_file_round_trip(self, tmp_path):
        t = topo.validate([4, 3, 2, 3, 4], CROSS_EDGES, code_layer=2)
        topo.save(t, tmp_path / "t.txt")
        assert topo.load(tmp_path / "t.txt") == t

    def test_missing_key(self):
        with pytest.raises(TopologyError):
            topo.loads("widths = [2, 1]\n")
