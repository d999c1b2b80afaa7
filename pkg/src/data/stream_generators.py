"""
Synthetic dynamic streams for tests, sweeps and the generator script

Every generator returns a list of EdgeUpdate that respects stream
legality: an edge is only inserted while absent and only deleted while
present. Randomised generators take a seed and use numpy's default_rng.
"""
import itertools

import numpy as np

from src.ingest.schemes import EdgeUpdate
from src.utils.errors import InvalidParamsError


def _edge(rng, num_vertices):
    u, v = rng.choice(num_vertices, size=2, replace=False).tolist()
    return (min(u, v), max(u, v))


def path_stream(num_vertices):
    """Insert-only path 0 - 1 - ... - (V-1)"""
    return [EdgeUpdate.insert(v, v + 1) for v in range(num_vertices - 1)]


def cycle_stream(num_vertices):
    if num_vertices < 3:
        raise InvalidParamsError(f"a cycle needs at least 3 vertices (got {num_vertices})")
    return path_stream(num_vertices) + [EdgeUpdate.insert(0, num_vertices - 1)]


def clique_stream(size, offset=0):
    """Insert-only K_size on vertices offset..offset+size-1"""
    vertices = range(offset, offset + size)
    return [EdgeUpdate.insert(u, v) for u, v in itertools.combinations(vertices, 2)]


def random_tree_stream(num_vertices, seed=1):
    """Insert-only uniformly random recursive tree"""
    rng = np.random.default_rng(seed)
    return [EdgeUpdate.insert(int(rng.integers(0, v)), v) for v in range(1, num_vertices)]


def random_dynamic_stream(num_vertices, num_updates, delete_fraction=0.3, seed=1, weights=None):
    """
    Random legal interleaving of inserts and deletes

    Args:
        num_vertices: V
        num_updates: Stream length N
        delete_fraction: Chance that a step deletes a live edge
        seed: Generator seed
        weights: Optional callable rng -> weight for inserted edges

    Returns:
        List of EdgeUpdate
    """
    if num_vertices < 2:
        raise InvalidParamsError("a dynamic stream needs at least 2 vertices")
    if not 0 <= delete_fraction < 1:
        raise InvalidParamsError(f"delete fraction must lie in [0, 1) (got {delete_fraction})")
    rng = np.random.default_rng(seed)
    max_edges = num_vertices * (num_vertices - 1) // 2
    live = {}
    live_list = []
    updates = []
    while len(updates) < num_updates:
        delete = live_list and (len(live_list) == max_edges or rng.random() < delete_fraction)
        if delete:
            i = int(rng.integers(0, len(live_list)))
            edge = live_list[i]
            live_list[i] = live_list[-1]
            live_list.pop()
            updates.append(EdgeUpdate.delete(*edge, weight=live.pop(edge)))
            continue
        edge = _edge(rng, num_vertices)
        if edge in live:
            continue
        weight = float(weights(rng)) if weights else 1.0
        live[edge] = weight
        live_list.append(edge)
        updates.append(EdgeUpdate.insert(*edge, weight=weight))
    return updates


def weighted_stream(num_vertices, num_updates, max_weight, delete_fraction=0.3, seed=1, integral=True):
    """Random dynamic stream with weights drawn uniformly from [1, W]"""
    if max_weight < 1:
        raise InvalidParamsError(f"max weight must be >= 1 (got {max_weight})")

    def draw(rng):
        if integral:
            return int(rng.integers(1, int(max_weight) + 1))
        return rng.uniform(1.0, max_weight)

    return random_dynamic_stream(num_vertices, num_updates, delete_fraction, seed, weights=draw)


def hypergraph_stream(num_vertices, arity, num_updates, delete_fraction=0.3, seed=1, uniform=True):
    """
    Random dynamic hyperedge stream

    Args:
        arity: r; every hyperedge has exactly r members when `uniform`,
            otherwise between 2 and r
    """
    if not 2 <= arity <= num_vertices:
        raise InvalidParamsError(f"arity must lie in [2, V] (got r={arity}, V={num_vertices})")
    rng = np.random.default_rng(seed)
    live = set()
    live_list = []
    updates = []
    while len(updates) < num_updates:
        if live_list and rng.random() < delete_fraction:
            i = int(rng.integers(0, len(live_list)))
            members = live_list[i]
            live_list[i] = live_list[-1]
            live_list.pop()
            live.discard(members)
            updates.append(EdgeUpdate.delete(*members))
            continue
        size = arity if uniform else int(rng.integers(2, arity + 1))
        members = tuple(sorted(rng.choice(num_vertices, size=size, replace=False).tolist()))
        if members in live:
            continue
        live.add(members)
        live_list.append(members)
        updates.append(EdgeUpdate.insert(*members))
    return updates


def planted_dense_stream(num_vertices, background_edges, clique_size, seed=1, delete_fraction=0.0):
    """
    Sparse random background plus a clique on a random vertex subset;
    edges are inserted in random order

    Returns:
        (updates, frozenset of planted vertices)
    """
    if clique_size > num_vertices:
        raise InvalidParamsError(f"clique of {clique_size} does not fit in V={num_vertices}")
    rng = np.random.default_rng(seed)
    planted = sorted(rng.choice(num_vertices, size=clique_size, replace=False).tolist())
    edges = set(itertools.combinations(planted, 2))
    max_edges = num_vertices * (num_vertices - 1) // 2
    target = min(max_edges, len(edges) + background_edges)
    while len(edges) < target:
        edges.add(_edge(rng, num_vertices))
    edges = sorted(edges)
    order = rng.permutation(len(edges))
    updates = [EdgeUpdate.insert(*edges[i]) for i in order.tolist()]
    if delete_fraction:
        # churn: delete a random share of background edges and re-insert them
        clique = set(itertools.combinations(planted, 2))
        background = [e for e in edges if e not in clique]
        churn = rng.choice(len(background), size=int(delete_fraction * len(background)), replace=False)
        for i in churn.tolist():
            updates.append(EdgeUpdate.delete(*background[i]))
            updates.append(EdgeUpdate.insert(*background[i]))
    return updates, frozenset(planted)


def reorder_inserts(updates, order='random', seed=1):
    """
    Reorder an insert-only stream

    Args:
        order: 'random', 'sorted' (lexicographic edge order), 'reverse' or
            'star' (edges grouped by their larger endpoint, high ids first)
    """
    if any(not u.is_insert for u in updates):
        raise InvalidParamsError("only insert-only streams can be reordered freely")
    updates = list(updates)
    if order == 'random':
        rng = np.random.default_rng(seed)
        return [updates[i] for i in rng.permutation(len(updates)).tolist()]
    if order == 'sorted':
        return sorted(updates, key=lambda u: u.key)
    if order == 'reverse':
        return sorted(updates, key=lambda u: u.key, reverse=True)
    if order == 'star':
        return sorted(updates, key=lambda u: (-u.key[-1], u.key))
    raise InvalidParamsError(f"unknown order {order!r}")


GENERATORS = {
    'path': lambda a: path_stream(a.vertices),
    'cycle': lambda a: cycle_stream(a.vertices),
    'clique': lambda a: clique_stream(a.vertices),
    'tree': lambda a: random_tree_stream(a.vertices, a.seed),
    'random': lambda a: random_dynamic_stream(a.vertices, a.updates, a.delete_fraction, a.seed),
    'weighted': lambda a: weighted_stream(
        a.vertices, a.updates, a.max_weight, a.delete_fraction, a.seed
    ),
    'hyper': lambda a: hypergraph_stream(
        a.vertices, a.arity, a.updates, a.delete_fraction, a.seed
    ),
    'dense': lambda a: planted_dense_stream(a.vertices, a.updates, a.clique_size, a.seed)[0],
}
