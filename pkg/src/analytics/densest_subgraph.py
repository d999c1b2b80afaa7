"""
Approximate Densest Subgraph

Potential edges are hashed into T = ceil(V / eps^2) buckets by a
log-wise independent polynomial hash. Each bucket is one sketch entity: an
exact counter E_b followed by ceil(2 log2^2 V) small L0 samplers of the
bucket's edge set, so ingestion is the ordinary vertex-based pipeline with
buckets in place of vertices.

After the stream:
1. E = sum E_b, the sampling rate p = min(1, V log2 V / (eps^2 E))
2. Per bucket draw X_b ~ Binomial(E_b, p) and recover X_b distinct edges
   by querying the samplers in order; each recovered edge is deleted from
   the later samplers before they are queried
3. Greedy peeling on the sampled graph H': repeatedly drop the lowest
   degree vertex (lowest id on ties) over a degree-sorted vertex list on
   the device, re-sorted after every removal; the densest suffix, scaled
   by 1/p, is the estimate
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.em.block_device import IoStats
from src.em.primitives import ext_scan, ext_sort, from_numpy, io_snapshot, to_numpy
from src.em.streams import BlockReader, BlockWriter
from src.ingest.ingestion import IngestState
from src.ingest.schemes import BucketedEdgeScheme
from src.sketch.hashing import derive_state
from src.sketch.l0_sampler import EdgeKey, VertexSketch, apply_coordinates, sketch_sample
from src.utils.errors import BucketOverflowError, InvalidParamsError, PreconditionError

logger = logging.getLogger(__name__)

DENSEST_TAG = 13


@dataclass(frozen=True)
class DensestConfig:
    """
    Args:
        epsilon: Accuracy
        sampler_constant: c in ceil(c * log2^2 V) samplers per bucket
        sampler_copies: L0 copies per sampler
        precondition_constant: Require eps^2 E / V >= this * log2 V
        enforce_precondition: Raise PreconditionError when the check fails
        abort_on_overflow: Raise BucketOverflowError when a bucket holds more
            than 4 eps^2 E / V edges instead of flagging the result
        num_buckets: Overrides T
        sampling_rate: Overrides p
    """
    epsilon: float = 0.5
    sampler_constant: float = 2.0
    sampler_copies: int = 2
    precondition_constant: float = 0.25
    enforce_precondition: bool = True
    abort_on_overflow: bool = True
    num_buckets: int = None
    sampling_rate: float = None

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InvalidParamsError(f"epsilon must lie in (0, 1) (got {self.epsilon})")
        if self.sampling_rate is not None and not 0 < self.sampling_rate <= 1:
            raise InvalidParamsError(f"sampling rate must lie in (0, 1] (got {self.sampling_rate})")

    def buckets_for(self, num_vertices):
        return self.num_buckets or math.ceil(num_vertices / self.epsilon ** 2)

    def samplers_for(self, num_vertices):
        log_v = math.log2(max(2, num_vertices))
        return max(1, math.ceil(self.sampler_constant * log_v ** 2))


@dataclass
class DensestResult:
    """
    Args:
        density: (1/p) times the densest peeling suffix of H'
        vertices: That suffix
        sample_density: Density of the suffix inside H'
        sampling_rate: p
        total_edges: E after the stream
        sampled_edges: |E(H')|
        overflow: Some bucket held more than 4 eps^2 E / V edges (only seen
            when abort_on_overflow is off)
        shortfall: Some bucket's samplers ran out before X_b edges
    """
    density: float
    vertices: frozenset
    sample_density: float
    sampling_rate: float
    total_edges: int
    sampled_edges: int
    overflow: bool = False
    shortfall: bool = False
    sample: list = field(default_factory=list)
    ingest_io: IoStats = field(default_factory=IoStats)
    query_io: IoStats = field(default_factory=IoStats)


def peel_densest(dev, edges, num_vertices):
    """
    Greedy peeling over a device-resident degree list

    Args:
        dev: BlockDevice
        edges: ExtArray of (u, v) records, u < v, no repeats

    Returns:
        (best density, frozenset of the densest suffix)
    """
    if edges.length == 0:
        return 0.0, frozenset()
    # adjacency in both directions, sorted by source
    both = dev.new_array(2 * edges.length, 2)
    with BlockWriter(both) as writer:
        for chunk in BlockReader(edges):
            writer.append(np.concatenate([chunk[:, :2], chunk[:, [1, 0]]]))
    adjacency = ext_sort(dev, both, key=(0, 1), free_input=True)

    degrees = dev.new_array(num_vertices, 2)
    with BlockWriter(degrees) as writer:
        current, count = None, 0
        for chunk in BlockReader(adjacency):
            for src in chunk[:, 0].tolist():
                if src != current:
                    if current is not None:
                        writer.append([[count, current]])
                    current, count = src, 0
                count += 1
        writer.append([[count, current]])
    order = ext_sort(dev, degrees, key=(0, 1), free_input=True)

    num_edges = edges.length
    remaining = order.length
    best = num_edges / remaining
    best_step = 0
    removed = []
    while remaining > 1:
        lowest = order.read_records(0, 1)[0]
        x = int(lowest[1])
        neighbours = []
        kept = dev.new_array(adjacency.length, 2)
        with BlockWriter(kept) as writer:
            for chunk in BlockReader(adjacency):
                touches = (chunk[:, 0] == x) | (chunk[:, 1] == x)
                neighbours.extend(chunk[chunk[:, 0] == x, 1].tolist())
                writer.append(chunk[~touches])
        adjacency.free()
        adjacency = kept

        hit = np.asarray(sorted(neighbours), dtype=np.int64)
        with dev.ram.reserve(len(hit) + 1):
            updated = dev.new_array(order.length, 2)
            with BlockWriter(updated) as writer:
                for chunk in BlockReader(order):
                    chunk = chunk[chunk[:, 1] != x].copy()
                    pos = np.searchsorted(hit, chunk[:, 1])
                    found = (pos < len(hit)) & (hit[np.minimum(pos, len(hit) - 1)] == chunk[:, 1])
                    chunk[found, 0] -= 1
                    writer.append(chunk)
        order.free()
        order = ext_sort(dev, updated, key=(0, 1), free_input=True)

        num_edges -= len(neighbours)
        remaining -= 1
        removed.append(x)
        if num_edges / remaining > best:
            best = num_edges / remaining
            best_step = len(removed)

    survivors = set()
    for chunk in BlockReader(order):
        survivors.update(chunk[:, 1].tolist())
    order.free()
    adjacency.free()
    suffix = frozenset(survivors) | frozenset(removed[best_step:])
    return best, suffix


class DensestSubgraphSketch:
    """
    Bucketed edge sketches for one stream

    Args:
        num_vertices: V
        dev: BlockDevice
        config: DensestConfig
        seed: Master seed
        batch_capacity: Passed to IngestState
    """

    def __init__(self, num_vertices, dev, config=None, seed=1, batch_capacity=None):
        self.num_vertices = num_vertices
        self.dev = dev
        self.config = config or DensestConfig()
        self.seed = seed
        self.scheme = BucketedEdgeScheme(
            num_vertices,
            self.config.buckets_for(num_vertices),
            self.config.samplers_for(num_vertices),
            seed=seed,
            copies=self.config.sampler_copies,
        )
        self.state = IngestState(self.scheme, dev, batch_capacity)

    def feed(self, update):
        self.state.feed(update)

    def feed_many(self, updates):
        for update in updates:
            self.feed(update)

    def _bucket_counts(self, sketches):
        """E_b for every bucket: the header word of each entity, in one scan"""
        counts = ext_scan(self.dev, sketches.ext, lambda c: c[:, :1], out_record_words=1)
        try:
            return to_numpy(counts)[:, 0].astype(np.int64)
        finally:
            counts.free()

    def _recover_bucket(self, sketches, bucket, wanted):
        """Recover `wanted` distinct edges of one bucket"""
        scheme = self.scheme
        phi = scheme.entity_words
        V = self.num_vertices
        recovered = []
        for s in range(scheme.num_samplers):
            if len(recovered) == wanted:
                break
            params = scheme.layer_params[s]
            lo, hi = scheme.layer_span(s)
            with self.dev.ram.reserve(hi - lo):
                words = sketches.ext.read_words(bucket * phi + lo, hi - lo)
                sketch = VertexSketch.from_words(params, words)
                if recovered:
                    apply_coordinates(
                        sketch.data, params,
                        [EdgeKey(u, v).index(V) for u, v in recovered],
                        [-1] * len(recovered),
                    )
                result = sketch_sample(sketch)
            if result.ok:
                recovered.append(result.edge.as_tuple())
        return recovered

    def query(self):
        """
        Returns:
            DensestResult

        Raises:
            PreconditionError: eps^2 E / V below the configured multiple of log2 V
        """
        cfg = self.config
        sketches = self.state.finalize()
        start = io_snapshot(self.dev)
        V = self.num_vertices
        log_v = math.log2(max(2, V))
        try:
            counts = self._bucket_counts(sketches)
            total = int(counts.sum())
            ratio = cfg.epsilon ** 2 * total / V
            if ratio < cfg.precondition_constant * log_v:
                message = (
                    f"eps^2 E / V = {ratio:.3f} is below {cfg.precondition_constant} * log2 V "
                    f"= {cfg.precondition_constant * log_v:.3f} (E={total}, V={V})"
                )
                if cfg.enforce_precondition:
                    logger.warning("densest subgraph precondition failed: %s", message)
                    raise PreconditionError(message)
                logger.debug("densest subgraph precondition not enforced: %s", message)
            if cfg.sampling_rate is not None:
                p = cfg.sampling_rate
            elif total:
                p = min(1.0, V * log_v / (cfg.epsilon ** 2 * total))
            else:
                p = 1.0

            rng = np.random.default_rng(derive_state(self.seed, DENSEST_TAG, count=4))
            bucket_cap = 4 * ratio
            overflow = bool(total) and bool((counts > bucket_cap).any())
            if overflow:
                message = (
                    f"a bucket holds {int(counts.max())} edges, above 4 eps^2 E / V = {bucket_cap:.2f}"
                )
                if cfg.abort_on_overflow:
                    logger.warning("densest subgraph trial aborted: %s", message)
                    raise BucketOverflowError(message)
                logger.warning("densest subgraph: %s", message)
            shortfall = False
            sample = []
            for bucket in np.flatnonzero(counts > 0).tolist():
                wanted = int(rng.binomial(int(counts[bucket]), p))
                if wanted == 0:
                    continue
                got = self._recover_bucket(sketches, bucket, wanted)
                if len(got) < wanted:
                    shortfall = True
                sample.extend(got)
            if shortfall:
                logger.warning("densest subgraph: some buckets ran out of samplers")

            sample = sorted(set(sample))
            staged = from_numpy(self.dev, np.array(sample, dtype=np.int64).reshape(-1, 2))
            sample_density, vertices = peel_densest(self.dev, staged, V)
            staged.free()
        finally:
            sketches.free()
        return DensestResult(
            density=sample_density / p,
            vertices=vertices,
            sample_density=sample_density,
            sampling_rate=p,
            total_edges=total,
            sampled_edges=len(sample),
            overflow=overflow,
            shortfall=shortfall,
            sample=sample,
            ingest_io=sketches.stats.io,
            query_io=io_snapshot(self.dev) - start,
        )


def densest_subgraph(updates, num_vertices, dev, config=None, seed=1, batch_capacity=None):
    """DensestResult for a dynamic edge stream"""
    sketch = DensestSubgraphSketch(num_vertices, dev, config, seed, batch_capacity)
    sketch.feed_many(updates)
    return sketch.query()
