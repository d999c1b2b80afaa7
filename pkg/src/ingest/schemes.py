"""
Vertex-Based Sketch Schemes

A scheme says how one stream update becomes tagged copies (one per
entity whose sketch it touches) and how a batch of tagged copies is
applied to an entity's contiguous sketch words. Entities are vertices for
graph and hypergraph sketches, and edge buckets for the densest-subgraph
sketch.

Tagged record layout (int64 words):
    [target, position, delta, weight_bits, x_0, ..., x_{r-1}]
weight_bits is the float64 weight reinterpreted as int64; unused vertex
slots hold -1.
"""
from dataclasses import dataclass

import numpy as np

from src.sketch.hashing import PolynomialHash, nested_depth, derive_state
from src.sketch.hyper import hyper_coordinates, normalize_hyperedge
from src.sketch.l0_sampler import (
    SketchParams,
    add_sketch_words,
    apply_coordinates,
)
from src.utils.errors import InvalidParamsError, VertexRangeError

TARGET, POSITION, DELTA, WEIGHT = 0, 1, 2, 3
FIXED_WORDS = 4


@dataclass(frozen=True)
class EdgeUpdate:
    """One stream element: an edge or hyperedge with an insert/delete flag"""
    vertices: tuple
    delta: int = 1
    weight: float = 1.0

    @classmethod
    def insert(cls, *vertices, weight=1.0):
        return cls(tuple(int(v) for v in vertices), 1, float(weight))

    @classmethod
    def delete(cls, *vertices, weight=1.0):
        return cls(tuple(int(v) for v in vertices), -1, float(weight))

    @property
    def is_insert(self):
        return self.delta > 0

    @property
    def key(self):
        return tuple(sorted(self.vertices))


def weight_bits(weight):
    return int(np.array([weight], dtype=np.float64).view(np.int64)[0])


def weights_of(records):
    return records[:, WEIGHT].astype(np.int64).view(np.float64)


class SketchScheme:
    """
    Base class: entities of `entity_words` words, each an optional header
    followed by `num_layers` independent sketch layers
    """
    header_words = 0

    def __init__(self, num_entities, layer_params, arity=2):
        if not layer_params:
            raise InvalidParamsError("a scheme needs at least one sketch layer")
        self.num_entities = num_entities
        self.layer_params = list(layer_params)
        self.arity = arity
        self.record_words = FIXED_WORDS + arity

    @property
    def num_layers(self):
        return len(self.layer_params)

    @property
    def layer_words(self):
        return self.layer_params[0].words

    @property
    def entity_words(self):
        """phi"""
        return self.header_words + self.num_layers * self.layer_words

    def layer_span(self, layer):
        lo = self.header_words + layer * self.layer_words
        return lo, lo + self.layer_words

    def segments(self):
        segs = [(0, self.header_words)] if self.header_words else []
        return segs + [self.layer_span(i) for i in range(self.num_layers)]

    def windows(self, limit):
        """
        Word ranges of an entity applied one at a time; one window when the
        entity fits in `limit` words, otherwise whole layers per window
        """
        if self.entity_words <= limit:
            return [(0, self.entity_words)]
        windows = []
        lo = hi = 0
        for s, e in self.segments():
            if e - s > limit:
                raise InvalidParamsError(
                    f"one sketch layer ({e - s} words) does not fit in M/4={limit} words"
                )
            if e - lo > limit and hi > lo:
                windows.append((lo, hi))
                lo = s
            hi = e
        windows.append((lo, hi))
        return windows

    def expand(self, update):
        raise NotImplementedError

    def expand_many(self, updates):
        parts = [self.expand(u) for u in updates]
        parts = [p for p in parts if len(p)]
        if not parts:
            return np.zeros((0, self.record_words), dtype=np.int64)
        return np.concatenate(parts)

    def layer_mask(self, layer, records):
        return np.ones(len(records), dtype=bool)

    def layer_coordinates(self, layer, records):
        raise NotImplementedError

    def apply_header(self, header, records):
        pass

    def apply(self, buf, lo, hi, records):
        """
        Apply tagged records (all for one entity) to words [lo, hi) of that
        entity, held in `buf`
        """
        if len(records) == 0:
            return buf
        if self.header_words and lo == 0:
            self.apply_header(buf[:self.header_words], records)
        for layer in range(self.num_layers):
            s, e = self.layer_span(layer)
            if s < lo or e > hi:
                continue
            mask = self.layer_mask(layer, records)
            if not mask.any():
                continue
            indices, coefs = self.layer_coordinates(layer, records[mask])
            params = self.layer_params[layer]
            apply_coordinates(buf[s - lo:e - lo].reshape(params.shape), params, indices, coefs)
        return buf

    def add_entities(self, dst, src):
        """dst += src for (k, entity_words) blocks of whole entities"""
        dst = dst.reshape(-1, self.entity_words)
        src = np.asarray(src, dtype=np.int64).reshape(-1, self.entity_words)
        h = self.header_words
        if h:
            dst[:, :h] += src[:, :h]
        body = np.ascontiguousarray(dst[:, h:])
        add_sketch_words(body, src[:, h:], self.layer_params[0].prime)
        dst[:, h:] = body
        return dst

    def compatible(self, other):
        return (
            type(self) is type(other)
            and self.num_entities == other.num_entities
            and self.entity_words == other.entity_words
            and all(a.compatible(b) for a, b in zip(self.layer_params, other.layer_params))
        )

    def layer_scheme(self, layer):
        raise InvalidParamsError(f"{type(self).__name__} cannot be split into layers")


class GraphScheme(SketchScheme):
    """
    Stacked graph sketches: every vertex holds `num_layers` independent
    L0 sketches of its incident-edge vector

    Args:
        num_vertices: V
        num_layers: Independent layers (1 for connectivity, k for k-connectivity)
        seed: Master seed
        c0: Copies constant
        tag: Extra seed tag shared by all layers (e.g. a skeleton level)
        edge_filter: Optional (u, v, weight) -> bool; rejected updates are
            never staged
        layer_filter: Optional (layer, weights array) -> bool mask
    """

    def __init__(self, num_vertices, num_layers=1, seed=1, c0=2.0, tag=(),
                 edge_filter=None, layer_filter=None):
        self.num_vertices = num_vertices
        self.seed = seed
        self.c0 = c0
        self.tag = tuple(tag)
        self.edge_filter = edge_filter
        self.layer_filter = layer_filter
        params = [
            SketchParams(num_vertices, seed=seed, c0=c0, layer=self.tag + (i,))
            for i in range(num_layers)
        ]
        super().__init__(num_vertices, params, arity=2)

    def _check(self, u, v):
        V = self.num_vertices
        if not (0 <= u < V and 0 <= v < V):
            raise VertexRangeError(f"edge ({u}, {v}) has a vertex outside [0, {V})")
        if u == v:
            raise VertexRangeError(f"self-loop ({u}, {v}) is not an edge")

    def edge_records(self, u, v, delta, weight):
        wb = weight_bits(weight)
        return [[u, 0, delta, wb, u, v], [v, 1, delta, wb, u, v]]

    def expand(self, update):
        if len(update.vertices) != 2:
            raise VertexRangeError(f"graph update needs 2 vertices, got {update.vertices}")
        a, b = (int(x) for x in update.vertices)
        self._check(a, b)
        u, v = min(a, b), max(a, b)
        if self.edge_filter is not None and not self.edge_filter(u, v, update.weight):
            return np.zeros((0, self.record_words), dtype=np.int64)
        return np.array(self.edge_records(u, v, update.delta, update.weight), dtype=np.int64)

    def layer_mask(self, layer, records):
        if self.layer_filter is None:
            return np.ones(len(records), dtype=bool)
        return np.asarray(self.layer_filter(layer, weights_of(records)), dtype=bool)

    def layer_coordinates(self, layer, records):
        u = records[:, FIXED_WORDS]
        v = records[:, FIXED_WORDS + 1]
        sign = np.where(records[:, POSITION] == 0, 1, -1)
        return u * self.num_vertices + v, sign * records[:, DELTA]

    def layer_scheme(self, layer):
        single = GraphScheme(self.num_vertices, 1, self.seed, self.c0)
        single.layer_params = [self.layer_params[layer]]
        return single


class DoubleCoverScheme(GraphScheme):
    """
    Connectivity sketch of the double cover D(G) on 2V vertices: input edge
    (u, v) becomes (u, v + V) and (u + V, v)
    """

    def __init__(self, num_vertices, seed=1, c0=2.0):
        self.base_vertices = num_vertices
        super().__init__(2 * num_vertices, 1, seed=seed, c0=c0, tag=(7,))

    def expand(self, update):
        if len(update.vertices) != 2:
            raise VertexRangeError(f"graph update needs 2 vertices, got {update.vertices}")
        a, b = (int(x) for x in update.vertices)
        V = self.base_vertices
        if not (0 <= a < V and 0 <= b < V) or a == b:
            raise VertexRangeError(f"edge ({a}, {b}) is not a valid edge on {V} vertices")
        u, v = min(a, b), max(a, b)
        rows = self.edge_records(u, v + V, update.delta, update.weight)
        rows += self.edge_records(v, u + V, update.delta, update.weight)
        return np.array(rows, dtype=np.int64)


class HypergraphScheme(SketchScheme):
    """
    Pair-slot hypergraph sketches; a hyperedge of s vertices becomes s
    tagged copies
    """

    def __init__(self, num_vertices, arity, seed=1, c0=2.0):
        self.num_vertices = num_vertices
        self.seed = seed
        self.c0 = c0
        params = [SketchParams(num_vertices, seed=seed, c0=c0, arity=arity, layer=(0,))]
        super().__init__(num_vertices, params, arity=arity)

    def expand(self, update):
        members = normalize_hyperedge(update.vertices, self.num_vertices, self.arity)
        wb = weight_bits(update.weight)
        pad = [-1] * (self.arity - len(members))
        rows = [
            [m, i, update.delta, wb, *members, *pad]
            for i, m in enumerate(members)
        ]
        return np.array(rows, dtype=np.int64)

    def layer_coordinates(self, layer, records):
        indices = []
        coefs = []
        for rec in records.tolist():
            members = tuple(x for x in rec[FIXED_WORDS:] if x >= 0)
            idx, cf = hyper_coordinates(
                members, rec[POSITION], self.num_vertices, self.arity, rec[DELTA]
            )
            indices.append(idx)
            coefs.append(cf)
        return np.concatenate(indices), np.concatenate(coefs)

    def layer_scheme(self, layer):
        return self


class BucketedEdgeScheme(SketchScheme):
    """
    Edge buckets for densest subgraph: a log-wise independent hash sends
    each potential edge to one of T buckets; a bucket holds an exact edge
    counter followed by `num_samplers` small L0 sketches of its edge set
    """
    header_words = 1

    def __init__(self, num_vertices, num_buckets, num_samplers, seed=1, copies=2):
        self.num_vertices = num_vertices
        self.num_buckets = num_buckets
        self.num_samplers = num_samplers
        self.seed = seed
        self.bucket_hash = PolynomialHash.log_wise(seed, num_vertices, 11)
        params = [
            SketchParams(num_vertices, seed=seed, layer=(11, s), fixed_copies=copies)
            for s in range(num_samplers)
        ]
        super().__init__(num_buckets, params, arity=2)

    def bucket_of(self, u, v):
        return self.bucket_hash.bucket(u * self.num_vertices + v, self.num_buckets)

    def expand(self, update):
        if len(update.vertices) != 2:
            raise VertexRangeError(f"graph update needs 2 vertices, got {update.vertices}")
        a, b = (int(x) for x in update.vertices)
        V = self.num_vertices
        if not (0 <= a < V and 0 <= b < V) or a == b:
            raise VertexRangeError(f"edge ({a}, {b}) is not a valid edge on {V} vertices")
        u, v = min(a, b), max(a, b)
        row = [self.bucket_of(u, v), 0, update.delta, weight_bits(update.weight), u, v]
        return np.array([row], dtype=np.int64)

    def apply_header(self, header, records):
        header[0] += int(records[:, DELTA].sum())

    def layer_coordinates(self, layer, records):
        u = records[:, FIXED_WORDS]
        v = records[:, FIXED_WORDS + 1]
        return u * self.num_vertices + v, records[:, DELTA].copy()


def skeleton_level_filter(num_vertices, seed, level):
    """
    Membership of edge e in the level-i subsample G_i: depth(e) >= i under
    a seeded geometric hash, so G_{i+1} is a subset of G_i and an insert
    and its delete always route alike
    """
    key = derive_state(seed, 5, count=1)

    def accept(u, v, weight=1.0):
        if level == 0:
            return True
        depth = nested_depth(key, [u * num_vertices + v], 64)[0, 0]
        return depth >= level

    return accept


def mst_layer_filter(thresholds):
    """Layer i receives edges with weight <= thresholds[i]"""
    limits = np.asarray(thresholds, dtype=np.float64)

    def accept(layer, weights):
        return weights <= limits[layer] * (1 + 1e-12)

    return accept
