"""
Tests for pair-slot hypergraph sketches
"""
import numpy as np
import pytest

from src.data.stream_generators import hypergraph_stream, random_dynamic_stream
from src.ingest.ingestion import direct_apply
from src.ingest.schemes import GraphScheme, HypergraphScheme
from src.sketch.hyper import (
    decode_hyperedge,
    encode_hyperedge,
    hyper_index_space,
    hyper_index_validator,
    hyper_params,
    hyper_sample,
    hyper_vertex_update,
    normalize_hyperedge,
)
from src.sketch.l0_sampler import SampleStatus, VertexSketch, sketch_merge
from src.utils.errors import InvalidParamsError, VertexRangeError

V = 12


class TestNormalize:
    def test_sorted(self):
        assert normalize_hyperedge([7, 1, 4], V, 3) == (1, 4, 7)

    @pytest.mark.parametrize("members", [[3], [1, 2, 3, 4], [2, 2, 5], [0, V]])
    def test_rejected(self, members):
        with pytest.raises(VertexRangeError):
            normalize_hyperedge(members, V, 3)


def test_encoding_is_invertible():
    enc = encode_hyperedge((0, 5, 11), V)
    assert decode_hyperedge(enc, V, 3) == (0, 5, 11)
    assert decode_hyperedge(encode_hyperedge((2, 9), V), V, 3) == (2, 9)


def test_index_space_limit():
    with pytest.raises(InvalidParamsError):
        hyper_index_space(1 << 20, 4)


def test_copies_scale_with_arity():
    assert hyper_params(V, 4).copies == 2 * hyper_params(V, 2).copies


def test_single_hyperedge_is_sampled():
    params = hyper_params(V, 3, seed=3)
    sketch = VertexSketch(params)
    hyper_vertex_update(sketch, (4, 1, 7), position=0, delta=1)
    result, members = hyper_sample(sketch)
    assert result.ok
    assert members == (1, 4, 7)


def test_all_members_cancel():
    params = hyper_params(V, 3, seed=3)
    total = VertexSketch(params)
    for position in range(3):
        part = VertexSketch(params)
        hyper_vertex_update(part, (1, 4, 7), position=position, delta=1)
        total = sketch_merge(total, part)
    assert total.is_zero()
    assert hyper_sample(total)[0].status is SampleStatus.EMPTY


def test_two_of_three_members_still_see_the_hyperedge():
    params = hyper_params(V, 3, seed=8)
    total = VertexSketch(params)
    for position in (0, 2):
        part = VertexSketch(params)
        hyper_vertex_update(part, (1, 4, 7), position=position, delta=1)
        total = sketch_merge(total, part)
    result, members = hyper_sample(total)
    assert result.ok and members == (1, 4, 7)


def test_validator_rejects_garbage():
    valid = hyper_index_validator(V, 3)
    enc = encode_hyperedge((1, 4, 7), V)
    assert valid(enc * 9 + 0 * 3 + 2)
    assert not valid(enc * 9 + 2 * 3 + 0)
    assert not valid(encode_hyperedge((4, 1), V) * 9 + 1)


def test_arity_two_matches_graph_sketches():
    updates = random_dynamic_stream(V, 80, seed=2)
    hyper = direct_apply(HypergraphScheme(V, 2, seed=5), updates)
    graph = direct_apply(GraphScheme(V, 1, seed=5), updates)
    assert np.array_equal(hyper, graph)


def test_hypergraph_stream_is_legal_and_uniform():
    updates = hypergraph_stream(V, 3, 60, seed=1)
    live = set()
    for update in updates:
        assert len(update.vertices) == 3
        if update.is_insert:
            assert update.key not in live
            live.add(update.key)
        else:
            live.remove(update.key)
