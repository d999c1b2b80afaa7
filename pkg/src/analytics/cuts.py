"""
Approximate Minimum Cut from Subsampled Skeletons

Level i of a SkeletonStack sketches G_i, the subgraph of edges whose
seeded geometric depth is at least i (each edge survives a level with
probability 1/2, and an insert and its delete always land alike). Every
level holds k stacked connectivity sketches, so a k-connectivity
certificate H_i can be peeled off any level after the stream.

The minimum cut estimate is 2^j * lambda(H_j) for j = min{i : lambda(H_i) < k},
found by binary search over levels. The search result is checked against
level j - 1; when the levels are not monotone the search falls back to a
linear scan and says so.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from src.analytics.k_connectivity import KSketch, extract_certificate, min_cut_upto_k
from src.em.primitives import ext_lookup, ext_sort, from_numpy
from src.em.streams import BlockReader, BlockWriter
from src.ingest.schemes import skeleton_level_filter
from src.utils.errors import InvalidParamsError, SaturationError

logger = logging.getLogger(__name__)

DEFAULT_CK = 16.0


def sketch_levels_for(num_vertices, level_constant=2.0):
    """ceil(c * log2 V) + 1 subsampling levels"""
    return math.ceil(level_constant * math.log2(max(2, num_vertices))) + 1


def skeleton_k(num_vertices, epsilon, ck=DEFAULT_CK, sparsifier=False):
    """k = ceil(c_k * eps^-2 * log2 V), with log2^2 V for sparsifiers"""
    if not 0 < epsilon < 1:
        raise InvalidParamsError(f"epsilon must lie in (0, 1) (got {epsilon})")
    log_v = math.log2(max(2, num_vertices))
    scale = log_v ** 2 if sparsifier else log_v
    return max(1, math.ceil(ck * scale / epsilon ** 2))


class SkeletonStack:
    """
    Subsampled k-connectivity sketches, one KSketch per level

    Args:
        num_vertices: V
        dev: BlockDevice
        epsilon: Target accuracy
        seed: Master seed
        c0: Copies constant of every layer
        level_constant: c in ceil(c * log2 V) + 1 levels
        ck: c_k in the choice of k
        sparsifier: Size k for sparsification (log2^2 V) instead of min cut
        k: Overrides the computed k
        num_levels: Overrides the computed level count
        block_size: Deletion-schedule block size for certificates
        batch_capacity: Passed to every level's IngestState
    """

    def __init__(self, num_vertices, dev, epsilon=0.5, seed=1, c0=2.0, level_constant=2.0,
                 ck=DEFAULT_CK, sparsifier=False, k=None, num_levels=None, block_size=None,
                 batch_capacity=None):
        self.num_vertices = num_vertices
        self.dev = dev
        self.epsilon = epsilon
        self.seed = seed
        self.k = k or skeleton_k(num_vertices, epsilon, ck, sparsifier)
        self.num_levels = num_levels or sketch_levels_for(num_vertices, level_constant)
        self.block_size = block_size
        self.levels = [
            KSketch(
                num_vertices, self.k, dev, seed=seed, c0=c0, tag=(level,),
                edge_filter=skeleton_level_filter(num_vertices, seed, level),
                batch_capacity=batch_capacity,
            )
            for level in range(self.num_levels)
        ]
        self._layers = None
        self._certificates = {}
        self._cuts = {}

    def feed(self, update):
        for level in self.levels:
            level.feed(update)

    def feed_many(self, updates):
        for update in updates:
            self.feed(update)

    def finalize(self):
        if self._layers is None:
            self._layers = [level.finalize()[0] for level in self.levels]
        return self

    def certificate(self, level):
        """k-connectivity certificate H_level, extracted on first use"""
        self.finalize()
        if level not in self._certificates:
            self._certificates[level] = extract_certificate(
                self._layers[level], self.dev, block_size=self.block_size
            )
        return self._certificates[level]

    def min_cut(self, level):
        """MinCutResult of H_level capped at k"""
        if level not in self._cuts:
            self._cuts[level] = min_cut_upto_k(self.certificate(level), self.k, self.dev)
        return self._cuts[level]

    def free(self):
        for layers in self._layers or []:
            for layer in layers:
                layer.free()
        self._layers = []


def first_unsaturated(num_levels, saturated, what="level"):
    """
    j = min{i : not saturated(i)} by binary search

    The answer is validated at j - 1 and j + 1; a saturated level above an
    unsaturated one means the levels are not monotone, and the search is
    redone as a linear scan.

    Args:
        num_levels: Levels 0..num_levels-1
        saturated: Predicate on a level index

    Returns:
        (j, fell_back) where fell_back is True when the search had to be
        redone as a linear scan
    """
    last = num_levels - 1
    if saturated(last):
        raise SaturationError(
            f"every {what} up to {last} is saturated; raise k or the level count"
        )
    lo, hi = 0, last
    while lo < hi:
        mid = (lo + hi) // 2
        if saturated(mid):
            lo = mid + 1
        else:
            hi = mid
    monotone = (lo == 0 or saturated(lo - 1)) and (lo == last or not saturated(lo + 1))
    if monotone:
        return lo, False
    logger.warning(
        "%s connectivity is not monotone around %d; falling back to a linear scan", what, lo
    )
    for i in range(num_levels):
        if not saturated(i):
            return i, True
    raise SaturationError(f"every {what} is saturated")


@dataclass(frozen=True)
class MinCutEstimate:
    """
    Args:
        estimate: 2^level * lambda(H_level)
        level: j
        certificate_cut: lambda(H_j)
        side: Vertex set on one side of the minimising cut of H_j
        linear_fallback: Binary search was redone as a linear scan
    """
    estimate: float
    level: int
    certificate_cut: int
    side: frozenset
    linear_fallback: bool = False


def approx_min_cut(stack):
    """
    (1 + eps)-approximate minimum cut of the streamed graph

    Raises:
        SaturationError: lambda(H_i) >= k on every level
    """
    stack.finalize()
    j, fell_back = first_unsaturated(
        stack.num_levels, lambda i: stack.min_cut(i).saturated, "skeleton level"
    )
    cut = stack.min_cut(j)
    logger.debug("min cut: level %d, lambda(H_j)=%d, estimate %d", j, cut.value, cut.value << j)
    return MinCutEstimate(float(cut.value * 2 ** j), j, cut.value, cut.side, fell_back)


def recover_cut_edges(dev, edges, side):
    """
    Edges with exactly one endpoint in `side`

    Two sort + join passes mark each endpoint's membership, a scan keeps
    the crossing edges.

    Args:
        dev: BlockDevice
        edges: ExtArray of (u, v) records (the surviving edge list)
        side: Iterable of vertex ids

    Returns:
        Sorted list of (u, v) tuples
    """
    members = np.unique(np.fromiter((int(v) for v in side), dtype=np.int64))
    if edges.length == 0 or len(members) == 0:
        return []
    table = from_numpy(dev, np.column_stack([members, np.ones(len(members), dtype=np.int64)]))
    marked = dev.new_array(edges.length, 4)
    with BlockWriter(marked) as writer:
        for chunk in BlockReader(edges):
            writer.append(np.column_stack([chunk[:, :2], np.zeros((len(chunk), 2), dtype=np.int64)]))

    by_u = ext_sort(dev, marked, key=0, free_input=True)
    marked, _ = ext_lookup(dev, by_u, 0, table, 2)
    by_u.free()
    by_v = ext_sort(dev, marked, key=1, free_input=True)
    marked, _ = ext_lookup(dev, by_v, 1, table, 3)
    by_v.free()
    table.free()

    crossing = []
    for chunk in BlockReader(marked):
        cut = chunk[chunk[:, 2] != chunk[:, 3]]
        crossing.extend((min(u, v), max(u, v)) for u, v in cut[:, :2].tolist())
    marked.free()
    return sorted(crossing)
