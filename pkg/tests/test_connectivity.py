"""
Tests for Boruvka extraction over vertex sketches
"""
import numpy as np
import pytest

from conftest import make_device, surviving_pairs
from src.analytics import oracles
from src.analytics.connectivity import (
    boruvka_extract,
    connected_components,
    round_cap,
    static_connected_components,
)
from src.data.stream_generators import (
    clique_stream,
    path_stream,
    random_dynamic_stream,
    random_tree_stream,
)
from src.em.cost_model import extraction_bound
from src.ingest.ingestion import ingest_stream
from src.ingest.schemes import EdgeUpdate, GraphScheme
from src.utils.errors import InvalidParamsError


def _check_forest(result, updates, num_vertices):
    alive = set(surviving_pairs(updates))
    assert set(result.forest) <= alive
    assert len(result.forest) == num_vertices - result.num_components


def test_round_cap():
    assert round_cap(1) == 10
    assert round_cap(16) == 16
    assert round_cap(17) == 18


def test_path_is_one_component(dev):
    updates = path_stream(8)
    result, stats = connected_components(updates, 8, dev, seed=3)
    assert result.num_components == 1
    assert result.labels.tolist() == [0] * 8
    assert not result.round_cap_hit
    assert sorted(result.forest) == [(v, v + 1) for v in range(7)]
    assert stats.updates == 7


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_random_streams_match_oracle(dev, seed):
    V = 48
    updates = random_dynamic_stream(V, 150, delete_fraction=0.4, seed=seed)
    result, _ = connected_components(updates, V, dev, seed=seed)
    expected = oracles.component_labels(V, surviving_pairs(updates))
    assert result.labels.tolist() == expected.tolist()
    _check_forest(result, updates, V)


@pytest.mark.parametrize("relocation", ["inplace", "sort"])
@pytest.mark.parametrize("merge_strategy", ["memory", "hooking"])
def test_strategies_agree(dev, relocation, merge_strategy):
    V = 40
    updates = random_dynamic_stream(V, 120, seed=7)
    expected = oracles.component_labels(V, surviving_pairs(updates))
    result, _ = connected_components(
        updates, V, dev, seed=5, relocation=relocation, merge_strategy=merge_strategy
    )
    assert result.labels.tolist() == expected.tolist()
    _check_forest(result, updates, V)


def test_isolated_vertices_keep_their_own_label(dev):
    updates = clique_stream(4, offset=3)
    result, _ = connected_components(updates, 10, dev)
    assert result.labels.tolist() == [0, 1, 2, 3, 3, 3, 3, 7, 8, 9]
    assert result.num_components == 7
    assert result.components()[3] == [3, 4, 5, 6]
    assert result.same_component(4, 6)
    assert not result.same_component(2, 3)


def test_fully_deleted_stream(dev):
    inserts = random_tree_stream(12, seed=2)
    deletes = [EdgeUpdate.delete(*u.vertices) for u in inserts]
    result, _ = connected_components(inserts + deletes, 12, dev)
    assert result.num_components == 12
    assert result.forest == []
    assert result.rounds == 0


def test_empty_stream(dev):
    result, stats = connected_components([], 5, dev)
    assert result.labels.tolist() == [0, 1, 2, 3, 4]
    assert stats.batches == 0


def test_static_edges(dev):
    edges = [(0, 1), (2, 3), (3, 4), (6, 5)]
    result = static_connected_components(edges, 7, dev)
    assert result.labels.tolist() == [0, 0, 2, 2, 2, 5, 5]


def test_reinserted_edge_counts(dev):
    updates = [
        EdgeUpdate.insert(0, 1),
        EdgeUpdate.delete(0, 1),
        EdgeUpdate.insert(1, 2),
        EdgeUpdate.insert(0, 1),
    ]
    result, _ = connected_components(updates, 4, dev)
    assert result.labels.tolist() == [0, 0, 0, 3]


def test_stacked_sketches_rejected(dev):
    sketches = ingest_stream(GraphScheme(8, 2), dev, path_stream(8))
    with pytest.raises(InvalidParamsError):
        boruvka_extract(sketches)


def test_round_cap_respected(dev):
    sketches = ingest_stream(GraphScheme(32, seed=2), dev, path_stream(32))
    result = boruvka_extract(sketches, max_rounds=1)
    assert result.rounds == 1
    assert result.round_cap_hit
    assert result.num_components > 1


def test_io_is_reported(dev):
    V = 64
    updates = random_dynamic_stream(V, 300, seed=9)
    result, stats = connected_components(updates, V, dev)
    assert result.io.total > 0
    assert stats.io.total > 0
    assert result.predicted_bound > 0


def test_labels_are_smallest_member(dev):
    V = 30
    updates = random_dynamic_stream(V, 60, seed=12)
    result, _ = connected_components(updates, V, dev, seed=12)
    for label, members in result.components().items():
        assert label == min(members)
    assert np.array_equal(result.labels, oracles.component_labels(V, surviving_pairs(updates)))


@pytest.mark.parametrize("ram_words,block_words", [(4096, 64), (16384, 256), (16384, 512)])
@pytest.mark.parametrize("relocation", ["inplace", "sort"])
def test_extraction_io_within_sort_bound(ram_words, block_words, relocation):
    V = 64
    phi = GraphScheme(V).entity_words
    updates = random_dynamic_stream(V, 400, delete_fraction=0.3, seed=5)
    device = make_device(ram_words, block_words)
    try:
        result, _ = connected_components(updates, V, device, seed=5, relocation=relocation)
    finally:
        device.close()
    bound = extraction_bound(V, phi, ram_words, block_words)
    assert result.predicted_bound == bound
    assert result.io.total <= bound
    assert result.labels.tolist() == oracles.component_labels(V, surviving_pairs(updates)).tolist()


def test_extraction_grid_covers_small_sketches():
    phi = GraphScheme(64).entity_words
    assert 256 <= phi < 512
