"""
Bipartiteness Testing

G is bipartite iff its double cover D(G) (vertices v and v + V, edges
(u, v + V) and (u + V, v) per input edge) has exactly twice as many
components as G. Both graphs are sketched from the same stream.
"""
import logging
from dataclasses import dataclass, field

from src.analytics.connectivity import boruvka_extract
from src.em.block_device import IoStats
from src.ingest.ingestion import IngestState
from src.ingest.schemes import DoubleCoverScheme, GraphScheme

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BipartiteResult:
    bipartite: bool
    components: int
    cover_components: int
    round_cap_hit: bool = False
    ingest_io: IoStats = field(default_factory=IoStats)
    extract_io: IoStats = field(default_factory=IoStats)


class BipartiteTester:
    """
    Args:
        num_vertices: V
        dev: BlockDevice
        seed: Master seed
        c0: Copies constant
        batch_capacity: Passed to both ingest states
    """

    def __init__(self, num_vertices, dev, seed=1, c0=2.0, batch_capacity=None):
        self.num_vertices = num_vertices
        self.dev = dev
        self.graph_state = IngestState(GraphScheme(num_vertices, 1, seed=seed, c0=c0), dev, batch_capacity)
        self.cover_state = IngestState(DoubleCoverScheme(num_vertices, seed=seed, c0=c0), dev, batch_capacity)

    def feed(self, update):
        self.graph_state.feed(update)
        self.cover_state.feed(update)

    def feed_many(self, updates):
        for update in updates:
            self.feed(update)

    def result(self):
        graph = self.graph_state.finalize()
        cover = self.cover_state.finalize()
        try:
            g = boruvka_extract(graph, self.dev)
            d = boruvka_extract(cover, self.dev)
        finally:
            graph.free()
            cover.free()
        bipartite = d.num_components == 2 * g.num_components
        logger.debug(
            "bipartite test: cc(G)=%d, cc(D)=%d -> %s", g.num_components, d.num_components, bipartite
        )
        return BipartiteResult(
            bipartite=bipartite,
            components=g.num_components,
            cover_components=d.num_components,
            round_cap_hit=g.round_cap_hit or d.round_cap_hit,
            ingest_io=graph.stats.io + cover.stats.io,
            extract_io=g.io + d.io,
        )


def bipartite_test(updates, num_vertices, dev, seed=1, c0=2.0, batch_capacity=None):
    """BipartiteResult for a dynamic edge stream"""
    tester = BipartiteTester(num_vertices, dev, seed, c0, batch_capacity)
    tester.feed_many(updates)
    return tester.result()
