"""
k-Edge-Connectivity Certificates

k independent sketch layers per vertex all receive every update. After
the stream, spanning forests are peeled off one layer at a time: F_i is
extracted from layer i once F_0..F_{i-1} have been deleted from it, so the
forests are edge-disjoint and H = F_0 u ... u F_{k-1} keeps every edge
connectivity value up to k.

Deletions follow a logarithmic schedule over blocks of layers. Inside a
block each forest is deleted from the block's later layers directly.
Before block i is queried, the forests of blocks [i - 2^psi, i) are
deleted from blocks [i, i + 2^psi), psi being the largest j with
i = 0 (mod 2^j). schedule='naive' deletes every forest from every later
layer instead.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from src.analytics.connectivity import boruvka_extract
from src.em.block_device import IoStats
from src.em.primitives import from_numpy, io_snapshot, to_numpy
from src.ingest.ingestion import IngestState, bulk_apply, split_layers
from src.ingest.schemes import GraphScheme
from src.utils.errors import InvalidParamsError

logger = logging.getLogger(__name__)


def default_block_size(num_vertices):
    """ceil(log2 V)^2 forests per layer block"""
    return max(1, math.ceil(math.log2(max(2, num_vertices))) ** 2)


def schedule_span(block):
    """2^psi for block index `block` >= 1"""
    return block & -block


class KSketch:
    """
    k stacked connectivity sketches fed from one stream

    Args:
        num_vertices: V
        k: Number of layers (forests)
        dev: BlockDevice
        seed: Master seed
        c0: Copies constant
        tag: Extra seed tag shared by every layer
        edge_filter: Optional (u, v, weight) -> bool applied before staging
        batch_capacity: Passed to IngestState
    """

    def __init__(self, num_vertices, k, dev, seed=1, c0=2.0, tag=(), edge_filter=None,
                 batch_capacity=None):
        if k < 1:
            raise InvalidParamsError(f"k must be >= 1 (got {k})")
        self.num_vertices = num_vertices
        self.k = k
        self.dev = dev
        self.scheme = GraphScheme(num_vertices, k, seed=seed, c0=c0, tag=tag, edge_filter=edge_filter)
        self.state = IngestState(self.scheme, dev, batch_capacity)

    def feed(self, update):
        self.state.feed(update)

    def feed_many(self, updates):
        self.state.feed_many(updates)

    def finalize(self):
        """
        Returns:
            (list of k single-layer SketchArrays, IngestStats)
        """
        stacked = self.state.finalize()
        layers = split_layers(stacked, self.dev)
        stacked.free()
        return layers, stacked.stats


@dataclass
class Certificate:
    """
    Args:
        num_vertices: V
        forests: forests[i] = sorted (u, v) edges of F_i
        deletion_io: Block I/O spent deleting forests from later layers
        extraction_io: Block I/O spent in Boruvka extraction
        ledger: ledger[i] = Counter of edges deleted from layer i at the
            moment it was queried
        layer_failures: Sampling failures per layer
        layer_capped: Round-cap flags per layer
        skipped: Layers never queried because an earlier forest came back
            empty with no sampling failures (their forests are empty too)
    """
    num_vertices: int
    forests: list = field(default_factory=list)
    deletion_io: IoStats = field(default_factory=IoStats)
    extraction_io: IoStats = field(default_factory=IoStats)
    ledger: list = field(default_factory=list)
    layer_failures: list = field(default_factory=list)
    layer_capped: list = field(default_factory=list)
    skipped: int = 0

    @property
    def k(self):
        return len(self.forests)

    def edges(self):
        """(u, v, forest index) for every certificate edge"""
        return [(u, v, i) for i, forest in enumerate(self.forests) for u, v in forest]

    def graph(self):
        G = nx.Graph()
        G.add_nodes_from(range(self.num_vertices))
        G.add_edges_from((u, v) for u, v, _ in self.edges())
        return G


def _deletion_records(forest):
    rows = []
    for u, v in forest:
        rows.append([u, 0, -1, 0, u, v])
        rows.append([v, 1, -1, 0, u, v])
    return np.array(rows, dtype=np.int64).reshape(-1, 6)


class CertificateExtractor:
    """
    Args:
        layers: k single-layer SketchArrays of the same graph
        dev: BlockDevice
        block_size: Layers per schedule block (defaults to ceil(log2 V)^2)
        schedule: 'log' or 'naive'
        extract_options: Passed to boruvka_extract
    """

    def __init__(self, layers, dev, block_size=None, schedule='log', **extract_options):
        if not layers:
            raise InvalidParamsError("a certificate needs at least one sketch layer")
        if schedule not in ('log', 'naive'):
            raise InvalidParamsError(f"unknown deletion schedule {schedule!r}")
        self.layers = layers
        self.dev = dev
        self.k = len(layers)
        self.num_vertices = layers[0].num_entities
        self.block_size = block_size or default_block_size(self.num_vertices)
        self.schedule = schedule
        self.extract_options = extract_options
        self.num_blocks = -(-self.k // self.block_size)
        self.certificate = Certificate(self.num_vertices)
        self._exhausted = False
        self.certificate.ledger = [Counter() for _ in range(self.k)]

    def _block_layers(self, block):
        lo = block * self.block_size
        return range(lo, min(self.k, lo + self.block_size))

    def _delete(self, forest, targets):
        """Delete forest edges from every layer in `targets`"""
        targets = list(targets)
        if not forest or not targets:
            return
        start = io_snapshot(self.dev)
        bulk_apply([self.layers[layer] for layer in targets], _deletion_records(forest))
        for layer in targets:
            self.certificate.ledger[layer].update(forest)
        self.certificate.deletion_io = self.certificate.deletion_io + (io_snapshot(self.dev) - start)

    def _extract(self, layer):
        start = io_snapshot(self.dev)
        result = boruvka_extract(self.layers[layer], self.dev, **self.extract_options)
        self.certificate.extraction_io = self.certificate.extraction_io + (io_snapshot(self.dev) - start)
        forest = [tuple(e) for e in result.forest]
        self.certificate.forests.append(forest)
        self.certificate.layer_failures.append(result.failures)
        self.certificate.layer_capped.append(result.round_cap_hit)
        logger.debug("forest %d: %d edges, %d rounds", layer, len(forest), result.rounds)
        if not forest and not result.failures:
            self._exhausted = True
        return forest

    def _skip_rest(self):
        """An empty residual graph stays empty; later layers get empty forests"""
        skipped = self.k - len(self.certificate.forests)
        self.certificate.forests.extend([] for _ in range(skipped))
        self.certificate.layer_failures.extend([0] * skipped)
        self.certificate.layer_capped.extend([False] * skipped)
        self.certificate.skipped = skipped
        if skipped:
            logger.debug("residual graph empty after %d forests", self.k - skipped)

    def _run_naive(self):
        for layer in range(self.k):
            forest = self._extract(layer)
            if self._exhausted:
                return
            self._delete(forest, range(layer + 1, self.k))

    def _run_log(self):
        for block in range(self.num_blocks):
            if block:
                span = schedule_span(block)
                earlier = [
                    e
                    for b in range(block - span, block)
                    for layer in self._block_layers(b)
                    for e in self.certificate.forests[layer]
                ]
                targets = [
                    layer
                    for b in range(block, min(self.num_blocks, block + span))
                    for layer in self._block_layers(b)
                ]
                self._delete(earlier, targets)
            members = list(self._block_layers(block))
            for i, layer in enumerate(members):
                forest = self._extract(layer)
                if self._exhausted:
                    return
                self._delete(forest, members[i + 1:])

    def run(self):
        if self.schedule == 'naive':
            self._run_naive()
        else:
            self._run_log()
        self._skip_rest()
        logger.debug(
            "certificate: k=%d, %d blocks, deletion I/O %d, extraction I/O %d",
            self.k, self.num_blocks,
            self.certificate.deletion_io.total, self.certificate.extraction_io.total,
        )
        return self.certificate


def extract_certificate(layers, dev, block_size=None, schedule='log', **extract_options):
    """
    Peel k edge-disjoint spanning forests off k sketch layers

    Args:
        layers: Output of KSketch.finalize()[0]
        dev: BlockDevice
        block_size: Forests per schedule block
        schedule: 'log' (default) or 'naive'

    Returns:
        Certificate
    """
    return CertificateExtractor(layers, dev, block_size, schedule, **extract_options).run()


@dataclass(frozen=True)
class MinCutResult:
    """
    Args:
        value: Edge connectivity, capped at k
        saturated: True when the true value is >= k
        side: One side of a minimum cut (empty when saturated or V < 2)
    """
    value: int
    saturated: bool
    side: frozenset = frozenset()


def min_cut_upto_k(certificate, k, dev=None):
    """
    Exact edge connectivity of the certificate graph, capped at k

    Args:
        certificate: Certificate, or a networkx graph
        k: Cap
        dev: When given, the certificate edges are staged on and read back
            from the device so their loading is charged

    Returns:
        MinCutResult
    """
    G = certificate.graph() if isinstance(certificate, Certificate) else certificate
    if dev is not None and G.number_of_edges():
        staged = from_numpy(dev, np.array(list(G.edges()), dtype=np.int64))
        to_numpy(staged)
        staged.free()
    if G.number_of_nodes() < 2:
        return MinCutResult(k, True)
    if not nx.is_connected(G):
        side = frozenset(next(iter(nx.connected_components(G))))
        return MinCutResult(0, k <= 0, side)
    value, (side, _) = nx.stoer_wagner(G)
    if value >= k:
        return MinCutResult(k, True)
    return MinCutResult(int(value), False, frozenset(side))
