"""
L0-Sampling Vertex Sketches

A vertex sketch summarizes the signed incident-edge vector of one vertex
(or, after merging, of a vertex set):
- C independent samplers ("copies"), each with L nested subsampling levels
- Each level is a one-sparse bucket (gamma, sigma, tau)
    gamma = sum of coefficients
    sigma = sum of coefficient * index
    tau   = sum of coefficient * z_c^index mod p
- Edge (u, v), u < v, has index u*V + v; its coefficient is +1 in the
  sketch of u and -1 in the sketch of v, so edges inside a merged vertex
  set cancel

Sketches are plain int64 arrays of shape (C, L, 3), which is also their
on-device layout.
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property

import numpy as np

from src.sketch.hashing import MERSENNE_61, derive_state, fingerprint_bases, nested_depth
from src.utils.errors import InvalidParamsError, VertexRangeError

GAMMA, SIGMA, TAU = 0, 1, 2
BUCKET_WORDS = 3

LEFT = 'left'
RIGHT = 'right'


class SampleStatus(Enum):
    EDGE = 'edge'
    EMPTY = 'empty'
    FAIL = 'fail'


@dataclass(frozen=True)
class EdgeKey:
    """Undirected edge with u < v"""
    u: int
    v: int

    def __post_init__(self):
        if not 0 <= self.u < self.v:
            raise VertexRangeError(f"edge ({self.u}, {self.v}) must satisfy 0 <= u < v")

    @classmethod
    def of(cls, a, b):
        a, b = int(a), int(b)
        return cls(min(a, b), max(a, b))

    def index(self, num_vertices):
        return self.u * num_vertices + self.v

    @classmethod
    def from_index(cls, index, num_vertices):
        u, v = divmod(int(index), num_vertices)
        return cls(u, v)

    def as_tuple(self):
        return self.u, self.v


@dataclass(frozen=True)
class SampleResult:
    status: SampleStatus
    index: int = None
    edge: EdgeKey = None

    @property
    def ok(self):
        return self.status is SampleStatus.EDGE


@dataclass(frozen=True)
class SketchParams:
    """
    Shape and randomness of one sketch layer

    Args:
        num_vertices: V
        seed: Master seed
        c0: Copies constant, C = ceil(c0 * log2 V)
        arity: 2 for graphs, r > 2 for hypergraphs (pair-slot encoding)
        layer: Tag that makes stacked layers independent
        fixed_copies: Overrides C when positive
    """
    num_vertices: int
    seed: int = 1
    c0: float = 2.0
    arity: int = 2
    layer: tuple = field(default=())
    fixed_copies: int = 0
    prime: int = MERSENNE_61

    def __post_init__(self):
        if self.num_vertices < 1:
            raise InvalidParamsError(f"num_vertices must be >= 1 (got {self.num_vertices})")
        if self.seed < 0:
            raise InvalidParamsError(f"seed must be non-negative (got {self.seed})")
        if self.c0 <= 0:
            raise InvalidParamsError(f"c0 must be positive (got {self.c0})")
        if self.arity < 2:
            raise InvalidParamsError(f"arity must be >= 2 (got {self.arity})")
        if not isinstance(self.layer, tuple):
            object.__setattr__(self, 'layer', tuple(self.layer))

    @property
    def log_v(self):
        return math.log2(self.num_vertices) if self.num_vertices > 1 else 0.0

    @cached_property
    def index_space(self):
        if self.arity == 2:
            return self.num_vertices * self.num_vertices
        from src.sketch.hyper import hyper_index_space
        return hyper_index_space(self.num_vertices, self.arity)

    @property
    def copies(self):
        if self.fixed_copies:
            return self.fixed_copies
        base = max(1, math.ceil(self.c0 * self.log_v))
        return base * math.ceil(self.arity / 2)

    @property
    def levels(self):
        return math.ceil(math.log2(max(2, self.index_space))) + 2

    @property
    def words(self):
        """phi: words per vertex sketch"""
        return self.copies * self.levels * BUCKET_WORDS

    @property
    def shape(self):
        return self.copies, self.levels, BUCKET_WORDS

    @cached_property
    def subsample_keys(self):
        return derive_state(self.seed, 0, *self.layer, count=self.copies)

    @cached_property
    def bases(self):
        return fingerprint_bases(self.seed, 1, *self.layer, count=self.copies)

    def with_layer(self, *layer):
        return replace(self, layer=tuple(layer))

    def compatible(self, other):
        return (
            self.num_vertices == other.num_vertices
            and self.seed == other.seed
            and self.c0 == other.c0
            and self.arity == other.arity
            and self.layer == other.layer
            and self.copies == other.copies
        )

    def depths(self, indices):
        return nested_depth(self.subsample_keys, indices, self.levels - 1)

    def check_vertex(self, vertex):
        if not 0 <= int(vertex) < self.num_vertices:
            raise VertexRangeError(
                f"vertex {vertex} outside [0, {self.num_vertices})"
            )


class VertexSketch:
    """
    One vertex's (or vertex set's) L0 sketch
    """

    def __init__(self, params, data=None):
        self.params = params
        if data is None:
            data = np.zeros(params.shape, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.int64).reshape(params.shape)

    @classmethod
    def from_words(cls, params, words):
        return cls(params, np.array(words, dtype=np.int64, copy=True))

    @property
    def words(self):
        return self.data.reshape(-1)

    def is_zero(self):
        return not self.data.any()

    def copy(self):
        return VertexSketch(self.params, self.data.copy())

    def __eq__(self, other):
        return (
            isinstance(other, VertexSketch)
            and self.params.compatible(other.params)
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        C, L, _ = self.params.shape
        return f"VertexSketch(V={self.params.num_vertices}, C={C}, L={L}, zero={self.is_zero()})"


def apply_coordinates(data, params, indices, coefs):
    """
    Add sum_i coefs[i] * e_{indices[i]} to a (C, L, 3) sketch array in place

    Updates are bucketed by depth and suffix-summed, so the result is
    independent of the order of the updates.
    """
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    coefs = np.asarray(coefs, dtype=np.int64).reshape(-1)
    if len(indices) == 0:
        return data
    C, L, _ = params.shape
    p = params.prime
    depth = params.depths(indices)
    weighted = coefs * indices
    idx_list = indices.tolist()
    coef_list = coefs.tolist()
    for c in range(C):
        gam = np.zeros(L, dtype=np.int64)
        sig = np.zeros(L, dtype=np.int64)
        np.add.at(gam, depth[c], coefs)
        np.add.at(sig, depth[c], weighted)
        data[c, :, GAMMA] += np.cumsum(gam[::-1])[::-1]
        data[c, :, SIGMA] += np.cumsum(sig[::-1])[::-1]

        z = params.bases[c]
        acc = [0] * L
        for d, idx, coef in zip(depth[c].tolist(), idx_list, coef_list):
            acc[d] = (acc[d] + coef * pow(z, idx, p)) % p
        running = 0
        for level in range(L - 1, -1, -1):
            running = (running + acc[level]) % p
            if running:
                data[c, level, TAU] = (int(data[c, level, TAU]) + running) % p
    return data


def graph_coefficient(side, delta):
    if side == LEFT:
        return int(delta)
    if side == RIGHT:
        return -int(delta)
    raise InvalidParamsError(f"endpoint side must be 'left' or 'right' (got {side!r})")


def vertex_update(sketch, edge, side, delta, params=None):
    """
    Apply one edge update to the sketch of one of its endpoints

    Args:
        sketch: VertexSketch of edge.u (side='left') or edge.v (side='right')
        edge: EdgeKey
        side: 'left' or 'right'
        delta: +1 insert, -1 delete
        params: Defaults to sketch.params
    """
    params = params or sketch.params
    params.check_vertex(edge.u)
    params.check_vertex(edge.v)
    coef = graph_coefficient(side, delta)
    apply_coordinates(sketch.data, params, [edge.index(params.num_vertices)], [coef])


def add_sketch_words(dst, src, prime=MERSENNE_61):
    """In-place dst += src over flat (…, 3)-bucket word arrays"""
    d = dst.reshape(-1, BUCKET_WORDS)
    s = np.asarray(src, dtype=np.int64).reshape(-1, BUCKET_WORDS)
    d[:, GAMMA] += s[:, GAMMA]
    d[:, SIGMA] += s[:, SIGMA]
    d[:, TAU] = (d[:, TAU] + s[:, TAU]) % prime
    return dst


def sketch_merge(a, b):
    """Componentwise sum of two sketches built with identical params"""
    if not a.params.compatible(b.params):
        raise InvalidParamsError("cannot merge sketches with different params or seeds")
    out = a.copy()
    add_sketch_words(out.data, b.data, a.params.prime)
    return out


def _graph_index_valid(params):
    V = params.num_vertices

    def valid(index):
        u, v = divmod(index, V)
        return u < v

    return valid


def sketch_sample(sketch, start_copy=0, validate=None):
    """
    Recover one nonzero coordinate of the summarized vector

    Copies are tried cyclically from start_copy; within a copy levels are
    tried from the sparsest down. A bucket is accepted only if it is
    one-sparse with coefficient +-1 and its fingerprint verifies.

    Args:
        sketch: VertexSketch
        start_copy: First copy to try
        validate: Optional predicate on decoded indices; defaults to the
            graph edge check u < v

    Returns:
        SampleResult with status EDGE, EMPTY or FAIL
    """
    data = sketch.data
    if not data.any():
        return SampleResult(SampleStatus.EMPTY)
    params = sketch.params
    C, L, _ = params.shape
    p = params.prime
    space = params.index_space
    graph = params.arity == 2 and validate is None
    if validate is None:
        validate = _graph_index_valid(params)

    for k in range(C):
        c = (start_copy + k) % C
        for level in range(L - 1, -1, -1):
            gamma, sigma, tau = (int(x) for x in data[c, level])
            if gamma not in (1, -1):
                continue
            index = sigma * gamma
            if not 0 <= index < space:
                continue
            if tau != (gamma * pow(params.bases[c], index, p)) % p:
                continue
            if not validate(index):
                continue
            edge = EdgeKey.from_index(index, params.num_vertices) if graph else None
            return SampleResult(SampleStatus.EDGE, index=index, edge=edge)
    return SampleResult(SampleStatus.FAIL)
