"""
Hypergraph connectivity: pair-slot vertex sketches, then the same Boruvka
extraction as graphs with r-ary merges
"""
from src.analytics.connectivity import boruvka_extract
from src.ingest.ingestion import ingest_stream
from src.ingest.schemes import HypergraphScheme


def hypergraph_components(updates, num_vertices, arity, dev, seed=1, c0=2.0, batch_capacity=None,
                          **extract_options):
    """
    Spanning hyperforest and component labels of a dynamic hyperedge stream

    Args:
        updates: EdgeUpdates with 2..arity vertices each
        num_vertices: V
        arity: r, the largest hyperedge cardinality
        dev: BlockDevice

    Returns:
        (ConnectivityResult, IngestStats)
    """
    scheme = HypergraphScheme(num_vertices, arity, seed=seed, c0=c0)
    sketches = ingest_stream(scheme, dev, updates, batch_capacity)
    try:
        return boruvka_extract(sketches, dev, **extract_options), sketches.stats
    finally:
        sketches.free()
