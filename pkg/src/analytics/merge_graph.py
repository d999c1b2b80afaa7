"""
Merge-Graph Connected Components

One Boruvka round produces a merge list: records (a, b, witness...) saying
that components a and b are joined by the sampled (hyper)edge `witness`.
merge_graph_cc() finds the connected components of that list and keeps
exactly one witness per successful union, so the kept witnesses form a
forest on the component ids.

Two strategies:
- 'memory': a min-root union-find held in simulated RAM, used when the
  merge list is small; the list is still read through the device
- 'hooking': sort-based deterministic hooking. Every label hooks onto the
  smallest label it shares an edge with, hook chains are collapsed by
  pointer jumping, and rounds repeat until no edge crosses two labels
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from src.em.primitives import ext_lookup, ext_scan, ext_sort, from_numpy
from src.em.streams import BlockReader, BlockWriter
from src.utils.errors import InvalidParamsError

logger = logging.getLogger(__name__)

SRC, DST = 0, 1
SRC_LABEL, DST_LABEL = 2, 3


@dataclass
class MergeGraphResult:
    """
    Args:
        rep_map: ExtArray of (node, representative) sorted by node, one
            record per node of the merge graph; the representative is the
            smallest id in the node's component
        forest: Witness tuples of the unions that actually merged two
            components (padding removed)
        rounds: Hooking rounds (0 for the in-memory path)
    """
    rep_map: object
    forest: list = field(default_factory=list)
    rounds: int = 0

    @property
    def merges(self):
        return len(self.forest)


def _witness(row):
    return tuple(int(w) for w in row if w >= 0)


def choose_merge_strategy(dev, num_merges):
    # up to two new nodes per merge, two words each
    need = 4 * num_merges + 2 * dev.block_words
    return 'memory' if need <= dev.ram_words // 4 and need <= dev.ram.available else 'hooking'


def merge_graph_cc(dev, merges, strategy='auto'):
    """
    Connected components of a merge list

    Args:
        dev: BlockDevice
        merges: ExtArray of (a, b, witness...) records; -1 pads witnesses
        strategy: 'auto', 'memory' or 'hooking'

    Returns:
        MergeGraphResult
    """
    if merges.length == 0:
        return MergeGraphResult(dev.new_array(0, 2))
    if strategy == 'auto':
        strategy = choose_merge_strategy(dev, merges.length)
    if strategy == 'memory':
        return _memory_cc(dev, merges)
    if strategy == 'hooking':
        return _hooking_cc(dev, merges)
    raise InvalidParamsError(f"unknown merge-graph strategy {strategy!r}")


def _memory_cc(dev, merges):
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    forest = []
    with dev.ram.reserve(4 * merges.length):
        for chunk in BlockReader(merges):
            for row in chunk.tolist():
                ra, rb = find(row[SRC]), find(row[DST])
                if ra == rb:
                    continue
                lo, hi = min(ra, rb), max(ra, rb)
                parent[hi] = lo
                forest.append(_witness(row[2:]))
        rows = np.array([[node, find(node)] for node in sorted(parent)], dtype=np.int64)
        rep_map = from_numpy(dev, rows.reshape(-1, 2))
    logger.debug("merge graph (memory): %d merges, %d kept", merges.length, len(forest))
    return MergeGraphResult(rep_map, forest, 0)


def _filtered(dev, arr, keep, out_record_words=None, transform=None):
    """Copy the records of `arr` for which keep(chunk) is True"""
    rw = out_record_words or arr.record_words
    out = dev.new_array(arr.length, rw)
    with BlockWriter(out) as writer:
        for chunk in BlockReader(arr):
            mask = keep(chunk)
            if mask.any():
                rows = chunk[mask]
                writer.append(rows if transform is None else transform(rows))
    return out


def _node_table(dev, merges):
    """(node, node) for every distinct endpoint, sorted by node"""
    ends = dev.new_array(2 * merges.length, 1)
    with BlockWriter(ends) as writer:
        for chunk in BlockReader(merges):
            writer.append(chunk[:, [SRC, DST]].reshape(-1, 1))
    ordered = ext_sort(dev, ends, key=0, free_input=True)
    table = dev.new_array(ordered.length, 2)
    last = None
    with BlockWriter(table) as writer:
        for chunk in BlockReader(ordered):
            ids = chunk[:, 0]
            fresh = np.ones(len(ids), dtype=bool)
            fresh[1:] = ids[1:] != ids[:-1]
            if last is not None and ids[0] == last:
                fresh[0] = False
            last = int(ids[-1])
            unique = ids[fresh]
            writer.append(np.column_stack([unique, unique]))
    ordered.free()
    return table


def _lowest_hooks(dev, proposals):
    """Keep, per hooking label, the proposal with the smallest target"""
    ordered = ext_sort(dev, proposals, key=(0, 1), free_input=True)
    last = [None]

    def first_per_label(chunk):
        labels = chunk[:, 0]
        fresh = np.ones(len(labels), dtype=bool)
        fresh[1:] = labels[1:] != labels[:-1]
        if last[0] is not None and labels[0] == last[0]:
            fresh[0] = False
        last[0] = int(labels[-1])
        return fresh

    hooks = _filtered(dev, ordered, first_per_label)
    ordered.free()
    return hooks


def _pointer_jump(dev, pointers):
    """Collapse (label, target) chains until every target is a final root"""
    while True:
        by_target = ext_sort(dev, pointers, key=1)
        jumped, changed = ext_lookup(dev, by_target, 1, pointers, 1)
        by_target.free()
        pointers.free()
        pointers = ext_sort(dev, jumped, key=0, free_input=True)
        if changed == 0:
            return pointers


def _hooking_cc(dev, merges):
    rw = merges.record_words
    edges = ext_scan(
        dev, merges,
        lambda c: np.column_stack([c[:, :2], c[:, :2], c[:, 2:]]),
        out_record_words=rw + 2,
    )
    labels = _node_table(dev, merges)
    forest = []
    rounds = 0
    while True:
        by_src = ext_sort(dev, edges, key=SRC, free_input=True)
        edges, _ = ext_lookup(dev, by_src, SRC, labels, SRC_LABEL)
        by_src.free()
        by_dst = ext_sort(dev, edges, key=DST, free_input=True)
        edges, _ = ext_lookup(dev, by_dst, DST, labels, DST_LABEL)
        by_dst.free()

        def crossing(chunk):
            return chunk[:, SRC_LABEL] != chunk[:, DST_LABEL]

        def proposal(rows):
            hi = np.maximum(rows[:, SRC_LABEL], rows[:, DST_LABEL])
            lo = np.minimum(rows[:, SRC_LABEL], rows[:, DST_LABEL])
            return np.column_stack([hi, lo, rows[:, 4:]])

        proposals = _filtered(dev, edges, crossing, out_record_words=rw, transform=proposal)
        remaining = _filtered(dev, edges, crossing)
        edges.free()
        edges = remaining
        if proposals.length == 0:
            proposals.free()
            break

        hooks = _lowest_hooks(dev, proposals)
        for chunk in BlockReader(hooks):
            forest.extend(_witness(row) for row in chunk[:, 2:].tolist())
        pointers = ext_scan(dev, hooks, lambda c: c[:, :2], out_record_words=2)
        hooks.free()
        pointers = _pointer_jump(dev, pointers)

        by_label = ext_sort(dev, labels, key=1, free_input=True)
        relabeled, _ = ext_lookup(dev, by_label, 1, pointers, 1)
        by_label.free()
        pointers.free()
        labels = ext_sort(dev, relabeled, key=0, free_input=True)
        rounds += 1
        logger.debug("merge graph hooking round %d: %d crossing edges left", rounds, edges.length)

    edges.free()
    logger.debug("merge graph (hooking): %d merges, %d kept, %d rounds", merges.length, len(forest), rounds)
    return MergeGraphResult(labels, forest, rounds)
