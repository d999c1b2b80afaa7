"""
Tests for the sketch file format
"""
import numpy as np
import pytest

from src.data.stream_generators import hypergraph_stream, random_dynamic_stream
from src.ingest.ingestion import ingest_stream, load_sketch_array
from src.ingest.schemes import GraphScheme, HypergraphScheme
from src.sketch.l0_sampler import EdgeKey, LEFT, SketchParams, VertexSketch, vertex_update
from src.sketch.serialization import (
    HEADER_WORDS,
    MAGIC,
    deserialize_sketch,
    parse_header,
    serialize_sketch,
    sketch_header,
)
from src.utils.errors import CorruptSketchError


def _sketch():
    params = SketchParams(20, seed=9, layer=(3,))
    sketch = VertexSketch(params)
    vertex_update(sketch, EdgeKey.of(2, 11), LEFT, 1)
    return sketch


def test_single_sketch_round_trip():
    sketch = _sketch()
    words = serialize_sketch(sketch)
    assert words[0] == MAGIC
    assert len(words) == HEADER_WORDS + sketch.params.words
    restored = deserialize_sketch(words)
    assert restored == sketch
    assert restored.params.layer == (3,)


def test_bad_magic():
    words = serialize_sketch(_sketch())
    words[0] = 12345
    with pytest.raises(CorruptSketchError, match="magic"):
        deserialize_sketch(words)


def test_truncated_header():
    with pytest.raises(CorruptSketchError, match="truncated"):
        parse_header(serialize_sketch(_sketch())[:HEADER_WORDS - 1])


def test_inconsistent_levels():
    header = sketch_header(SketchParams(20))
    header[3] += 1
    with pytest.raises(CorruptSketchError, match="inconsistent"):
        parse_header(header)


def test_body_length_checked():
    words = serialize_sketch(_sketch())
    with pytest.raises(CorruptSketchError):
        deserialize_sketch(words[:-3])


def test_header_does_not_match_expected():
    header = sketch_header(SketchParams(20, seed=1))
    with pytest.raises(CorruptSketchError, match="expected"):
        parse_header(header, expected=SketchParams(20, seed=2))


@pytest.mark.parametrize("scheme", [
    GraphScheme(16, 2, seed=4, tag=(5,)),
    HypergraphScheme(10, 3, seed=4),
], ids=["graph", "hypergraph"])
def test_sketch_array_file_round_trip(dev, tmp_path, scheme):
    if scheme.arity == 2:
        updates = random_dynamic_stream(16, 150, seed=3)
    else:
        updates = hypergraph_stream(10, 3, 60, seed=3)
    sketches = ingest_stream(scheme, dev, updates)
    path = tmp_path / "sketches.bin"
    sketches.save(path)
    loaded = load_sketch_array(path, dev)
    assert loaded.scheme.compatible(scheme)
    assert np.array_equal(loaded.to_numpy(), sketches.to_numpy())


def test_truncated_body(dev, tmp_path):
    sketches = ingest_stream(GraphScheme(16, seed=4), dev, random_dynamic_stream(16, 40, seed=1))
    path = tmp_path / "sketches.bin"
    sketches.save(path)
    words = np.fromfile(path, dtype='<i8')
    words[:-5].tofile(path)
    with pytest.raises(CorruptSketchError, match="promises"):
        load_sketch_array(path, dev)
