"""
In-Memory Reference Answers

Exact, in-RAM counterparts of every streaming query, computed with
networkx on the edge set that survives a stream. Used by the test suite
and by the command line's --oracle-check.
"""
from collections import Counter

import networkx as nx
import numpy as np


def surviving_edges(updates):
    """
    Net edge multiset after a dynamic stream

    Returns:
        {sorted vertex tuple: (multiplicity, last inserted weight)}
    """
    counts = Counter()
    weights = {}
    for update in updates:
        key = update.key
        counts[key] += update.delta
        if update.delta > 0:
            weights[key] = update.weight
    return {key: (n, weights.get(key, 1.0)) for key, n in counts.items() if n > 0}


def edge_graph(num_vertices, edges):
    G = nx.Graph()
    G.add_nodes_from(range(num_vertices))
    G.add_edges_from(edges)
    return G


def component_labels(num_vertices, edges):
    """labels[v] = smallest vertex id of v's component; hyperedges join all members"""
    G = nx.Graph()
    G.add_nodes_from(range(num_vertices))
    for members in edges:
        members = list(members)
        G.add_edges_from((members[0], m) for m in members[1:])
    labels = np.arange(num_vertices, dtype=np.int64)
    for comp in nx.connected_components(G):
        labels[list(comp)] = min(comp)
    return labels


def num_components(num_vertices, edges):
    return nx.number_connected_components(edge_graph(num_vertices, edges))


def is_bipartite(num_vertices, edges):
    return nx.is_bipartite(edge_graph(num_vertices, edges))


def mst_weight(num_vertices, weighted_edges):
    """Minimum spanning forest weight of (u, v, w) edges"""
    G = nx.Graph()
    G.add_nodes_from(range(num_vertices))
    G.add_weighted_edges_from(weighted_edges)
    return nx.minimum_spanning_tree(G, weight='weight', algorithm='kruskal').size(weight='weight')


def edge_connectivity(num_vertices, edges):
    """Global minimum cut of a unit-weight graph (0 when disconnected)"""
    G = edge_graph(num_vertices, edges)
    if num_vertices < 2 or not nx.is_connected(G):
        return 0
    nx.set_edge_attributes(G, 1, 'weight')
    value, _ = nx.stoer_wagner(G)
    return int(value)


def st_cut(num_vertices, edges, s, t, weights=None):
    """Minimum s-t cut; unit capacities unless `weights` maps edges to capacities"""
    G = edge_graph(num_vertices, edges)
    for u, v in G.edges():
        key = (min(u, v), max(u, v))
        G[u][v]['capacity'] = weights.get(key, 1) if weights else 1
    if not nx.has_path(G, s, t):
        return 0
    return nx.minimum_cut_value(G, s, t)


def cut_size(edges, side):
    side = set(side)
    return sum(1 for u, v in edges if (u in side) != (v in side))


def peel_density(edges):
    """
    Quadratic greedy peeling: drop the lowest-degree vertex (lowest id on
    ties) and keep the densest suffix

    Returns:
        (density, frozenset)
    """
    edges = {(min(u, v), max(u, v)) for u, v in edges}
    if not edges:
        return 0.0, frozenset()
    alive = sorted({x for e in edges for x in e})
    live_edges = set(edges)
    best = len(live_edges) / len(alive)
    best_set = frozenset(alive)
    while len(alive) > 1:
        degree = {v: 0 for v in alive}
        for u, v in live_edges:
            degree[u] += 1
            degree[v] += 1
        x = min(alive, key=lambda v: (degree[v], v))
        alive.remove(x)
        live_edges = {e for e in live_edges if x not in e}
        density = len(live_edges) / len(alive)
        if density > best:
            best = density
            best_set = frozenset(alive)
    return best, best_set


def densest_subgraph(num_vertices, edges):
    """
    Exact maximum density |E(S)| / |S| by Goldberg's min-cut construction

    Returns:
        (density, frozenset)
    """
    edges = [(min(u, v), max(u, v)) for u, v in set(map(tuple, edges))]
    m = len(edges)
    if m == 0:
        return 0.0, frozenset()
    degree = Counter()
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1

    def denser_than(g):
        D = nx.DiGraph()
        for v in range(num_vertices):
            D.add_edge('s', v, capacity=m)
            D.add_edge(v, 't', capacity=m + 2 * g - degree[v])
        for u, v in edges:
            D.add_edge(u, v, capacity=1)
            D.add_edge(v, u, capacity=1)
        _, (source_side, _) = nx.minimum_cut(D, 's', 't')
        return {v for v in source_side if v != 's'}

    lo, hi = 0.0, float(m)
    best = set()
    gap = 1.0 / (num_vertices * max(1, num_vertices - 1))
    while hi - lo >= gap:
        mid = (lo + hi) / 2
        found = denser_than(mid)
        if found:
            lo, best = mid, found
        else:
            hi = mid
    if not best:
        best = {x for e in edges for x in e}
    inside = sum(1 for u, v in edges if u in best and v in best)
    return inside / len(best), frozenset(best)
