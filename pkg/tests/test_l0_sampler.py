"""
Tests for L0-sampling vertex sketches: shape, linearity, sampling
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.sketch.hashing import derive_state, nested_depth
from src.sketch.l0_sampler import (
    LEFT,
    RIGHT,
    EdgeKey,
    SampleStatus,
    SketchParams,
    VertexSketch,
    apply_coordinates,
    sketch_merge,
    sketch_sample,
    vertex_update,
)
from src.utils.errors import InvalidParamsError, VertexRangeError

V = 16

edges_strategy = st.sets(
    st.tuples(st.integers(0, V - 1), st.integers(0, V - 1)).filter(lambda e: e[0] < e[1]),
    max_size=30,
)


def sketches_of(edges, params):
    """One sketch per vertex after inserting `edges`"""
    out = [VertexSketch(params) for _ in range(params.num_vertices)]
    for u, v in edges:
        edge = EdgeKey(u, v)
        vertex_update(out[u], edge, LEFT, 1)
        vertex_update(out[v], edge, RIGHT, 1)
    return out


def test_params_shape():
    params = SketchParams(V)
    assert params.copies == 8
    assert params.levels == 10
    assert params.words == 240
    assert VertexSketch(params).data.shape == (8, 10, 3)


def test_params_validation():
    with pytest.raises(InvalidParamsError):
        SketchParams(0)
    with pytest.raises(InvalidParamsError):
        SketchParams(V, c0=0)
    with pytest.raises(InvalidParamsError):
        SketchParams(V, arity=1)


def test_empty_sketch_samples_empty():
    assert sketch_sample(VertexSketch(SketchParams(V))).status is SampleStatus.EMPTY


def test_single_edge_is_recovered():
    params = SketchParams(V, seed=4)
    sketch = VertexSketch(params)
    vertex_update(sketch, EdgeKey(3, 9), LEFT, 1)
    result = sketch_sample(sketch)
    assert result.ok
    assert result.edge == EdgeKey(3, 9)
    assert result.index == 3 * V + 9


def test_insert_then_delete_cancels():
    params = SketchParams(V)
    sketch = VertexSketch(params)
    vertex_update(sketch, EdgeKey(1, 2), LEFT, 1)
    vertex_update(sketch, EdgeKey(1, 2), LEFT, -1)
    assert sketch.is_zero()


def test_endpoints_cancel_when_merged():
    params = SketchParams(V, seed=2)
    a, b = sketches_of([(2, 5)], params)[2], sketches_of([(2, 5)], params)[5]
    assert sketch_merge(a, b).is_zero()


@settings(max_examples=30, deadline=None)
@given(edges_strategy, st.sets(st.integers(0, V - 1), min_size=1))
def test_merged_sketch_summarizes_the_cut(edges, side):
    params = SketchParams(V, seed=7)
    per_vertex = sketches_of(edges, params)
    merged = VertexSketch(params)
    for v in side:
        merged = sketch_merge(merged, per_vertex[v])

    cut = VertexSketch(params)
    for u, v in edges:
        if (u in side) != (v in side):
            vertex_update(cut, EdgeKey(u, v), LEFT if u in side else RIGHT, 1)
    assert np.array_equal(merged.data, cut.data)

    result = sketch_sample(merged)
    crossing = {(u, v) for u, v in edges if (u in side) != (v in side)}
    if not crossing:
        assert result.status is SampleStatus.EMPTY
    elif result.ok:
        assert result.edge.as_tuple() in crossing


@settings(max_examples=20, deadline=None)
@given(st.permutations(list(range(12))))
def test_update_order_does_not_matter(order):
    params = SketchParams(V, seed=5)
    indices = [u * V + v for u, v in [(0, 1), (0, 3), (0, 7), (0, 9)] * 3]
    coefs = [1, 1, -1, 1, -1, 1, 1, 1, 1, -1, 1, 1]
    forward = VertexSketch(params)
    apply_coordinates(forward.data, params, indices, coefs)
    shuffled = VertexSketch(params)
    for i in order:
        apply_coordinates(shuffled.data, params, [indices[i]], [coefs[i]])
    assert np.array_equal(forward.data, shuffled.data)


def test_sampling_rarely_fails():
    successes = 0
    for seed in range(50):
        params = SketchParams(V, seed=seed)
        sketch = VertexSketch(params)
        incident = [EdgeKey(0, v) for v in range(1, 12)]
        for edge in incident:
            vertex_update(sketch, edge, LEFT, 1)
        result = sketch_sample(sketch)
        if result.ok:
            assert result.edge in incident
            successes += 1
    assert successes >= 45


def test_start_copy_changes_which_copy_answers():
    params = SketchParams(V, seed=11)
    sketch = VertexSketch(params)
    for v in range(1, 16):
        vertex_update(sketch, EdgeKey(0, v), LEFT, 1)
    results = {sketch_sample(sketch, start_copy=c).index for c in range(params.copies)}
    assert all(i is None or i // V == 0 for i in results)


def test_merge_rejects_different_seeds():
    with pytest.raises(InvalidParamsError):
        sketch_merge(VertexSketch(SketchParams(V, seed=1)), VertexSketch(SketchParams(V, seed=2)))


def test_edge_key_validation():
    with pytest.raises(VertexRangeError):
        EdgeKey(3, 3)
    with pytest.raises(VertexRangeError):
        EdgeKey(5, 2)
    assert EdgeKey.of(5, 2) == EdgeKey(2, 5)
    assert EdgeKey.from_index(EdgeKey(2, 5).index(V), V) == EdgeKey(2, 5)


def test_vertex_out_of_range():
    sketch = VertexSketch(SketchParams(V))
    with pytest.raises(VertexRangeError):
        vertex_update(sketch, EdgeKey(3, V), LEFT, 1)


def test_nested_depths_are_geometric():
    keys = derive_state(9, 0, count=1)
    depths = nested_depth(keys, np.arange(20000), 30)[0]
    share = (depths >= 1).mean()
    assert 0.45 < share < 0.55
    assert 0.2 < (depths >= 2).mean() < 0.3
