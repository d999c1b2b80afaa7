"""
Cut Sparsifier from a Skeleton Stack

For every edge e found in some certificate H_i, j(e) is the first level
whose certificate separates e's endpoints with fewer than k edge-disjoint
paths. e enters the sparsifier with weight 2^j(e) when e belongs to
H_j(e). Local connectivities are exact unit-capacity max flows cut off
at k augmentations.
"""
import logging
from dataclasses import dataclass, field

import networkx as nx
from networkx.algorithms.connectivity import (
    build_auxiliary_edge_connectivity,
    local_edge_connectivity,
)
from networkx.algorithms.flow import build_residual_network

from src.analytics.cuts import first_unsaturated
from src.utils.errors import InvalidParamsError

logger = logging.getLogger(__name__)


@dataclass
class WeightedSparsifier:
    """
    Args:
        num_vertices: V
        edges: {(u, v): weight} with u < v and weights powers of two
        k: Connectivity cap used for the levels
        fallbacks: Edges whose level search fell back to a linear scan
    """
    num_vertices: int
    edges: dict = field(default_factory=dict)
    k: int = 0
    fallbacks: int = 0

    def graph(self):
        G = nx.Graph()
        G.add_nodes_from(range(self.num_vertices))
        for (u, v), w in self.edges.items():
            G.add_edge(u, v, weight=w)
        return G

    def cut_value(self, side):
        """Total weight of edges with exactly one endpoint in `side`"""
        side = set(side)
        return sum(w for (u, v), w in self.edges.items() if (u in side) != (v in side))

    def rows(self):
        """Sorted (u, v, weight) rows"""
        return [(u, v, w) for (u, v), w in sorted(self.edges.items())]


class _LevelConnectivity:
    """Capped local edge connectivity on one certificate, auxiliary graph reused"""

    def __init__(self, certificate, k):
        self.k = k
        self.graph = certificate.graph()
        self.edges = {tuple(sorted(e)) for e in self.graph.edges()}
        self.aux = build_auxiliary_edge_connectivity(self.graph)
        self.residual = build_residual_network(self.aux, 'capacity')

    def local(self, u, v):
        if not self.graph.degree(u) or not self.graph.degree(v):
            return 0
        return local_edge_connectivity(
            self.graph, u, v, auxiliary=self.aux, residual=self.residual, cutoff=self.k
        )


def build_sparsifier(stack):
    """
    Weighted cut sparsifier of the streamed graph

    Args:
        stack: SkeletonStack built with sparsifier=True

    Returns:
        WeightedSparsifier

    Raises:
        SaturationError: some edge is k-connected on every level
    """
    stack.finalize()
    k = stack.k
    levels = {}

    def level(i):
        if i not in levels:
            levels[i] = _LevelConnectivity(stack.certificate(i), k)
        return levels[i]

    candidates = set()
    for i in range(stack.num_levels):
        candidates |= level(i).edges

    sparsifier = WeightedSparsifier(stack.num_vertices, k=k)
    for u, v in sorted(candidates):
        j, fell_back = first_unsaturated(
            stack.num_levels, lambda i: level(i).local(u, v) >= k, f"edge ({u}, {v})"
        )
        sparsifier.fallbacks += int(fell_back)
        if (u, v) in level(j).edges:
            sparsifier.edges[(u, v)] = 2 ** j
    logger.debug(
        "sparsifier: %d candidate edges, %d kept, %d level-search fallbacks",
        len(candidates), len(sparsifier.edges), sparsifier.fallbacks,
    )
    return sparsifier


def query_st_cut(sparsifier, s, t):
    """
    Minimum s-t cut of the weighted sparsifier (weights as capacities)

    Raises:
        InvalidParamsError: s == t or either vertex is out of range
    """
    if s == t:
        raise InvalidParamsError(f"s-t cut needs two distinct vertices (got s = t = {s})")
    for x in (s, t):
        if not 0 <= x < sparsifier.num_vertices:
            raise InvalidParamsError(f"vertex {x} outside [0, {sparsifier.num_vertices})")
    G = sparsifier.graph()
    if not nx.has_path(G, s, t):
        return 0.0
    return float(nx.minimum_cut_value(G, s, t, capacity='weight'))
