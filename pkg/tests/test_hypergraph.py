"""
Tests for hypergraph connectivity
"""
import pytest

from src.analytics import oracles
from src.analytics.hypergraph import hypergraph_components
from src.data.stream_generators import hypergraph_stream
from src.ingest.schemes import EdgeUpdate


def _surviving(updates):
    return sorted(oracles.surviving_edges(updates))


def test_two_triangles_and_a_loner(dev):
    updates = [
        EdgeUpdate.insert(0, 1, 2),
        EdgeUpdate.insert(3, 4, 5),
        EdgeUpdate.insert(2, 3),
        EdgeUpdate.delete(2, 3),
    ]
    result, stats = hypergraph_components(updates, 7, 3, dev, seed=2)
    assert result.labels.tolist() == [0, 0, 0, 3, 3, 3, 6]
    assert set(result.forest) == {(0, 1, 2), (3, 4, 5)}
    assert stats.tagged_copies == 3 + 3 + 2 + 2


@pytest.mark.parametrize("uniform", [True, False])
@pytest.mark.parametrize("seed", [1, 2])
def test_random_hyperstreams_match_oracle(big_dev, uniform, seed):
    V, r = 24, 3
    updates = hypergraph_stream(V, r, 40, delete_fraction=0.3, seed=seed, uniform=uniform)
    result, _ = hypergraph_components(updates, V, r, big_dev, seed=seed)
    alive = _surviving(updates)
    assert result.labels.tolist() == oracles.component_labels(V, alive).tolist()
    assert set(result.forest) <= set(alive)
    assert oracles.component_labels(V, result.forest).tolist() == result.labels.tolist()


def test_arity_four(dev):
    updates = [EdgeUpdate.insert(0, 2, 4, 6), EdgeUpdate.insert(6, 7), EdgeUpdate.insert(1, 3, 5)]
    result, _ = hypergraph_components(updates, 8, 4, dev)
    assert result.num_components == 2
    assert result.same_component(0, 7)
    assert result.same_component(1, 5)
