"""
Hypergraph vertex sketches (pair-slot encoding)

A hyperedge h = (h_0 < h_1 < ... < h_{s-1}), s <= r, is encoded as a
base-(V+1) number with 0 meaning "absent"; every pair of positions a < b
of h owns one coordinate enc(h)*r^2 + a*r + b. The sketch of the vertex at
position i gets +delta on slots (i, j) with i < j and -delta on slots
(j, i) with j < i, so summing the sketches of all members cancels every
slot while any proper subset leaves crossing slots nonzero.

With r = 2 the encoding falls back to the graph index u*V + v, making a
2-uniform stream bit-identical to the graph pipeline.
"""
import numpy as np

from src.sketch.l0_sampler import (
    SampleResult,
    SampleStatus,
    SketchParams,
    apply_coordinates,
    sketch_sample,
)
from src.utils.errors import InvalidParamsError, VertexRangeError

MAX_INDEX_SPACE = 1 << 48


def hyper_index_space(num_vertices, arity):
    space = (num_vertices + 1) ** arity * arity * arity
    if space > MAX_INDEX_SPACE:
        raise InvalidParamsError(
            f"hyperedge index space {space} for V={num_vertices}, r={arity} exceeds 2^48"
        )
    return space


def hyper_params(num_vertices, arity, seed=1, c0=2.0, layer=()):
    """SketchParams for r-uniform-at-most hypergraphs (C scales with ceil(r/2))"""
    return SketchParams(num_vertices, seed=seed, c0=c0, arity=arity, layer=tuple(layer))


def normalize_hyperedge(vertices, num_vertices, arity):
    """Sorted tuple; rejects duplicates, out-of-range ids and bad cardinality"""
    members = tuple(sorted(int(v) for v in vertices))
    if len(members) < 2:
        raise VertexRangeError(f"hyperedge {members} needs at least 2 vertices")
    if len(members) > arity:
        raise VertexRangeError(f"hyperedge {members} has cardinality {len(members)} > r={arity}")
    if len(set(members)) != len(members):
        raise VertexRangeError(f"hyperedge {members} repeats a vertex")
    if members[0] < 0 or members[-1] >= num_vertices:
        raise VertexRangeError(f"hyperedge {members} has a vertex outside [0, {num_vertices})")
    return members


def encode_hyperedge(members, num_vertices):
    enc = 0
    base = num_vertices + 1
    for v in reversed(members):
        enc = enc * base + (v + 1)
    return enc


def decode_hyperedge(enc, num_vertices, arity):
    base = num_vertices + 1
    members = []
    for _ in range(arity):
        enc, digit = divmod(enc, base)
        if digit == 0:
            break
        members.append(digit - 1)
    if enc:
        return None
    return tuple(members)


def hyper_coordinates(members, position, num_vertices, arity, delta=1):
    """
    Coordinates and coefficients touched in the sketch of members[position]

    Returns:
        (indices, coefficients) int64 arrays
    """
    s = len(members)
    if not 0 <= position < s:
        raise VertexRangeError(f"position {position} outside hyperedge of size {s}")
    if arity == 2:
        u, v = members
        sign = 1 if position == 0 else -1
        return (
            np.array([u * num_vertices + v], dtype=np.int64),
            np.array([sign * delta], dtype=np.int64),
        )
    base = encode_hyperedge(members, num_vertices) * arity * arity
    indices = []
    coefs = []
    for j in range(s):
        if j == position:
            continue
        a, b = min(position, j), max(position, j)
        indices.append(base + a * arity + b)
        coefs.append(delta if position < j else -delta)
    return np.array(indices, dtype=np.int64), np.array(coefs, dtype=np.int64)


def hyper_vertex_update(sketch, hyperedge, position, delta, params=None):
    """
    Apply one hyperedge update to the sketch of its position-th member

    Args:
        sketch: VertexSketch built with hyper_params
        hyperedge: Vertex ids (any order; sorted internally)
        position: Index of the sketch's vertex in the sorted hyperedge
        delta: +1 insert, -1 delete
        params: Defaults to sketch.params
    """
    params = params or sketch.params
    members = normalize_hyperedge(hyperedge, params.num_vertices, params.arity)
    indices, coefs = hyper_coordinates(
        members, position, params.num_vertices, params.arity, delta
    )
    apply_coordinates(sketch.data, params, indices, coefs)


def hyper_index_validator(num_vertices, arity):
    """Predicate accepting only well-formed pair-slot indices"""

    def valid(index):
        enc, slot = divmod(index, arity * arity)
        a, b = divmod(slot, arity)
        members = decode_hyperedge(enc, num_vertices, arity)
        if members is None or len(members) < 2:
            return False
        if list(members) != sorted(set(members)):
            return False
        return a < b < len(members)

    return valid


def hyper_sample(sketch, start_copy=0):
    """
    Sample a hyperedge crossing the cut summarized by the sketch

    Returns:
        (SampleResult, hyperedge tuple or None)
    """
    params = sketch.params
    if params.arity == 2:
        result = sketch_sample(sketch, start_copy)
        return result, result.edge.as_tuple() if result.ok else None
    result = sketch_sample(
        sketch, start_copy, validate=hyper_index_validator(params.num_vertices, params.arity)
    )
    if not result.ok:
        return result, None
    enc = result.index // (params.arity * params.arity)
    members = decode_hyperedge(enc, params.num_vertices, params.arity)
    return SampleResult(SampleStatus.EDGE, index=result.index), members
