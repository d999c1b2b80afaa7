"""
Batched Union-Find

Parent pointers for V nodes live on the block device as (node, parent)
records sorted by node. Finds and unions are never issued one at a time:
a whole column of node ids is resolved with sort + merge-join passes, and
a batch of unions arrives as a representative map from the merge graph.

Invariant: after every relabel() each node points straight at its root,
so one join pass resolves any node; find_column keeps joining until a
pass changes nothing.
"""
import logging

import numpy as np

from src.em.primitives import ext_lookup, ext_sort, from_numpy, to_numpy

logger = logging.getLogger(__name__)

NODE, PARENT = 0, 1


class BatchedUnionFind:
    """
    Args:
        dev: BlockDevice
        num_nodes: V; node ids are 0..V-1 and every node starts as its own root
    """

    def __init__(self, dev, num_nodes):
        self.dev = dev
        self.num_nodes = num_nodes
        ids = np.arange(num_nodes, dtype=np.int64)
        self.table = from_numpy(dev, np.column_stack([ids, ids]))
        self.find_passes = 0

    def find_column(self, arr, col, max_passes=8):
        """
        Replace column `col` of every record with that node's root

        Values missing from the table (e.g. -1 padding) are left alone.

        Returns:
            New ExtArray sorted by the resolved column; the input is freed
        """
        current = arr
        for _ in range(max_passes):
            ordered = ext_sort(self.dev, current, key=col, free_input=True)
            resolved, changed = ext_lookup(self.dev, ordered, col, self.table, col)
            ordered.free()
            current = resolved
            self.find_passes += 1
            if changed == 0:
                break
        return current

    def relabel(self, rep_map):
        """
        Apply a batch of unions: every node whose root r appears in
        rep_map (records (r, rep) sorted by r) now points at rep
        """
        if rep_map.length == 0:
            return
        by_parent = ext_sort(self.dev, self.table, key=PARENT, free_input=True)
        relabeled, changed = ext_lookup(self.dev, by_parent, PARENT, rep_map, PARENT)
        by_parent.free()
        self.table = ext_sort(self.dev, relabeled, key=NODE, free_input=True)
        logger.debug("union-find relabel: %d parent pointers moved", changed)

    def labels(self):
        """Root of every node, as a host array indexed by node id"""
        return to_numpy(self.table)[:, PARENT].copy()

    def free(self):
        self.table.free()
