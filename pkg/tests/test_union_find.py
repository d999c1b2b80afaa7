"""
Tests for the batched union-find and merge-graph components
"""
import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_device
from src.analytics.merge_graph import merge_graph_cc
from src.analytics.union_find import BatchedUnionFind
from src.em.primitives import from_numpy, to_numpy
from src.utils.errors import InvalidParamsError


class TestBatchedUnionFind:
    def test_starts_as_singletons(self, dev):
        uf = BatchedUnionFind(dev, 5)
        assert uf.labels().tolist() == [0, 1, 2, 3, 4]

    def test_relabel_and_find(self, dev):
        uf = BatchedUnionFind(dev, 6)
        uf.relabel(from_numpy(dev, [[2, 0], [4, 0]]))
        uf.relabel(from_numpy(dev, [[0, 1]]))
        assert uf.labels().tolist() == [1, 1, 1, 3, 1, 5]

        queries = from_numpy(dev, [[4, 10], [3, 11], [-1, 12], [2, 13]])
        resolved = to_numpy(uf.find_column(queries, 0))
        assert sorted(map(tuple, resolved.tolist())) == [(-1, 12), (1, 10), (1, 13), (3, 11)]

    def test_empty_rep_map(self, dev):
        uf = BatchedUnionFind(dev, 3)
        uf.relabel(dev.new_array(0, 2))
        assert uf.labels().tolist() == [0, 1, 2]


def _merges(dev, pairs):
    return from_numpy(dev, np.array([[a, b, a, b] for a, b in pairs], dtype=np.int64).reshape(-1, 4))


def _expected_reps(pairs):
    g = nx.Graph(pairs)
    return {node: min(comp) for comp in nx.connected_components(g) for node in comp}


@pytest.mark.parametrize("strategy", ["memory", "hooking"])
def test_small_merge_list(dev, strategy):
    pairs = [(3, 1), (1, 5), (7, 8), (5, 3)]
    result = merge_graph_cc(dev, _merges(dev, pairs), strategy)
    reps = dict(map(tuple, to_numpy(result.rep_map).tolist()))
    assert reps == {1: 1, 3: 1, 5: 1, 7: 7, 8: 7}
    assert result.merges == 3
    assert nx.is_forest(nx.Graph(result.forest))


def test_empty_merge_list(dev):
    result = merge_graph_cc(dev, dev.new_array(0, 4))
    assert result.rep_map.length == 0
    assert result.forest == []


def test_unknown_strategy(dev):
    with pytest.raises(InvalidParamsError):
        merge_graph_cc(dev, _merges(dev, [(0, 1)]), 'magic')


@settings(max_examples=25, deadline=None)
@given(
    pairs=st.lists(
        st.tuples(st.integers(0, 40), st.integers(0, 40)).filter(lambda p: p[0] != p[1]),
        min_size=1, max_size=60,
    ),
    strategy=st.sampled_from(["memory", "hooking"]),
)
def test_merge_graph_matches_networkx(pairs, strategy):
    dev = make_device(1024, 16)
    result = merge_graph_cc(dev, _merges(dev, pairs), strategy)
    reps = dict(map(tuple, to_numpy(result.rep_map).tolist()))
    expected = _expected_reps(pairs)
    assert reps == expected
    nodes = len(expected)
    components = len(set(expected.values()))
    assert result.merges == nodes - components
    forest = nx.Graph(result.forest)
    assert nx.is_forest(forest)
    assert set(forest.edges()) <= {tuple(p) for p in pairs} | {tuple(reversed(p)) for p in pairs}
