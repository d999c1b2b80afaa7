"""
Connected Components from Vertex Sketches

Boruvka rounds over a finalized sketch array. Every live component owns
one record (component id, summed sketch) in an id-sorted array on the
device. One round:
1. Scan the live records and sample one outgoing (hyper)edge per
   component, starting at copy (round mod C). Components whose sketch is
   zero are finished; failed samples just sit the round out.
2. Resolve sampled endpoints to their current roots in the batched
   union-find, build the merge graph, take its components and apply the
   resulting unions.
3. Sum the sketches of merged components into their representative:
   in place when one sketch spans at least a block, otherwise by
   relocating (destination, sketch) records with a sort and summing runs.

Component ids are always the smallest vertex id of the component.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.analytics.merge_graph import merge_graph_cc
from src.analytics.union_find import BatchedUnionFind
from src.em.block_device import IoStats
from src.em.cost_model import extraction_bound
from src.em.primitives import ext_lookup, ext_sort, io_snapshot
from src.em.streams import BlockReader, BlockUpdater, BlockWriter
from src.ingest.ingestion import ingest_stream
from src.ingest.schemes import EdgeUpdate, GraphScheme
from src.sketch.hyper import hyper_sample
from src.sketch.l0_sampler import SampleStatus, VertexSketch, add_sketch_words
from src.utils.errors import CorruptSketchError, InvalidParamsError

logger = logging.getLogger(__name__)

COMP = 0
DEST = 1
FINISHED = -1


@dataclass
class ConnectivityResult:
    """
    Args:
        labels: labels[v] = smallest vertex id in v's component
        forest: Sampled (hyper)edges that merged two components, as
            sorted vertex tuples
        rounds: Boruvka rounds run
        round_cap_hit: Live components were left when the round cap hit
        failures: Component samples that failed
        io: Block I/O spent on extraction
    """
    labels: np.ndarray
    forest: list = field(default_factory=list)
    rounds: int = 0
    round_cap_hit: bool = False
    failures: int = 0
    io: IoStats = field(default_factory=IoStats)
    predicted_bound: float = 0.0

    @property
    def num_components(self):
        return int(len(np.unique(self.labels)))

    def components(self):
        """{label: sorted member list}"""
        groups = {}
        for v, label in enumerate(self.labels.tolist()):
            groups.setdefault(label, []).append(v)
        return groups

    def same_component(self, u, v):
        return bool(self.labels[u] == self.labels[v])


def round_cap(num_vertices):
    return 2 * math.ceil(math.log2(max(2, num_vertices))) + 8


def _check_sketches(sketches):
    scheme = sketches.scheme
    if scheme.num_layers != 1 or scheme.header_words:
        raise InvalidParamsError(
            f"connectivity needs a single-layer vertex sketch array, got {type(scheme).__name__} "
            f"with {scheme.num_layers} layers"
        )
    params = scheme.layer_params[0]
    ext = sketches.ext
    if ext.record_words != params.words or ext.length != scheme.num_entities:
        raise CorruptSketchError(
            f"sketch array holds {ext.length} records of {ext.record_words} words, "
            f"params promise {scheme.num_entities} x {params.words}"
        )
    return params


def _initial_live(dev, sketches):
    """(v, sketch) for every vertex with a nonzero sketch"""
    phi = sketches.entity_words
    live = dev.new_array(sketches.num_entities, phi + 1)
    per_chunk = max(1, dev.block_words // phi)
    v = 0
    with BlockWriter(live) as writer:
        for chunk in BlockReader(sketches.ext, chunk_records=per_chunk):
            ids = np.arange(v, v + len(chunk), dtype=np.int64)
            nonzero = chunk.any(axis=1)
            if nonzero.any():
                writer.append(np.column_stack([ids[nonzero], chunk[nonzero]]))
            v += len(chunk)
    return live


class BoruvkaExtractor:
    """
    One extraction run over one sketch array

    Args:
        sketches: SketchArray with a single graph or hypergraph layer
        dev: BlockDevice (defaults to the array's device)
        max_rounds: Round cap; defaults to 2*ceil(log2 V) + 8
        merge_strategy: Passed to merge_graph_cc
        relocation: 'auto', 'inplace' or 'sort' for phase 3
    """

    def __init__(self, sketches, dev=None, max_rounds=None, merge_strategy='auto', relocation='auto'):
        self.sketches = sketches
        self.dev = dev or sketches.device
        self.params = _check_sketches(sketches)
        self.num_vertices = sketches.num_entities
        self.phi = self.params.words
        self.arity = self.params.arity
        self.max_rounds = max_rounds or round_cap(self.num_vertices)
        self.merge_strategy = merge_strategy
        if relocation == 'auto':
            relocation = 'inplace' if self.phi >= self.dev.block_words else 'sort'
        if relocation not in ('inplace', 'sort'):
            raise InvalidParamsError(f"unknown relocation {relocation!r}")
        self.relocation = relocation
        self.forest = []
        self.failures = 0

    def _live_chunk(self):
        return max(1, self.dev.block_words // (self.phi + 1))

    def _sample_phase(self, live, rnd):
        """
        Returns:
            (merges ExtArray [comp, x_0.., rx_0..], tags ExtArray [comp, dest],
             number of failed samples)
        """
        dev = self.dev
        r = self.arity
        start_copy = rnd % self.params.copies
        merges = dev.new_array(live.length, 1 + 2 * r)
        tags = dev.new_array(live.length, 2)
        failed = 0
        with BlockWriter(merges) as merge_out, BlockWriter(tags) as tag_out:
            for chunk in BlockReader(live, chunk_records=self._live_chunk()):
                rows = []
                tag_rows = []
                for rec in chunk:
                    comp = int(rec[COMP])
                    sketch = VertexSketch(self.params, rec[1:])
                    result, members = hyper_sample(sketch, start_copy)
                    if result.status is SampleStatus.EMPTY:
                        tag_rows.append((comp, FINISHED))
                        continue
                    tag_rows.append((comp, comp))
                    if result.status is SampleStatus.FAIL:
                        failed += 1
                        continue
                    padded = list(members) + [-1] * (r - len(members))
                    rows.append([comp, *padded, *padded])
                if rows:
                    merge_out.append(np.array(rows, dtype=np.int64))
                tag_out.append(np.array(tag_rows, dtype=np.int64))
        return merges, tags, failed

    def _merge_list(self, merges):
        """Merge-graph records [comp, root, witness...] from resolved samples"""
        dev = self.dev
        r = self.arity
        out = dev.new_array(merges.length * r, 2 + r)
        with BlockWriter(out) as writer:
            for chunk in BlockReader(merges):
                comp = chunk[:, 0]
                witness = chunk[:, 1:1 + r]
                for j in range(r):
                    root = chunk[:, 1 + r + j]
                    keep = (root >= 0) & (root != comp)
                    if keep.any():
                        writer.append(np.column_stack([comp[keep], root[keep], witness[keep]]))
        return out

    def _union_phase(self, merges, uf):
        """Resolve, merge and relabel; returns (rep map of (node, rep), merges)"""
        if merges.length == 0:
            merges.free()
            return self.dev.new_array(0, 2), 0
        r = self.arity
        for j in range(r):
            merges = uf.find_column(merges, 1 + r + j)
        merge_list = self._merge_list(merges)
        merges.free()
        result = merge_graph_cc(self.dev, merge_list, self.merge_strategy)
        merge_list.free()
        self.forest.extend(result.forest)
        uf.relabel(result.rep_map)
        return result.rep_map, result.merges

    def _relocate_sorted(self, live, marks):
        """Sort (dest, comp, sketch) records by destination and sum each run"""
        dev = self.dev
        phi = self.phi
        chunk = self._live_chunk()
        moved = dev.new_array(live.length, phi + 2)
        with BlockWriter(moved) as writer:
            for recs, tags in zip(
                BlockReader(live, chunk_records=chunk), BlockReader(marks, chunk_records=chunk)
            ):
                keep = tags[:, DEST] != FINISHED
                if keep.any():
                    writer.append(np.column_stack([tags[keep, DEST], recs[keep]]))
        ordered = ext_sort(dev, moved, key=(0, 1), free_input=True)

        fresh = dev.new_array(ordered.length, phi + 1)
        current = None
        acc = np.zeros(phi, dtype=np.int64)
        with dev.ram.reserve(phi + 1), BlockWriter(fresh) as writer:
            for part in BlockReader(ordered):
                for rec in part:
                    dest = int(rec[0])
                    if dest != current:
                        if current is not None:
                            writer.append(np.concatenate([[current], acc]))
                        current = dest
                        acc[:] = 0
                    add_sketch_words(acc, rec[2:], self.params.prime)
            if current is not None:
                writer.append(np.concatenate([[current], acc]))
        ordered.free()
        return fresh

    def _relocate_inplace(self, live, marks):
        """Add each merged sketch into its representative's record, then compact"""
        dev = self.dev
        lw = self.phi + 1

        moves = dev.new_array(live.length, 2)
        with BlockWriter(moves) as writer:
            pos = 0
            for tags in BlockReader(marks):
                positions = np.arange(pos, pos + len(tags), dtype=np.int64)
                moving = (tags[:, DEST] != FINISHED) & (tags[:, DEST] != tags[:, COMP])
                if moving.any():
                    writer.append(np.column_stack([tags[moving, DEST], positions[moving]]))
                pos += len(tags)
        by_dest = ext_sort(dev, moves, key=(0, 1), free_input=True)

        # destination positions by a merge join of destinations with live ids
        placed = dev.new_array(by_dest.length, 2)
        tag_rows = ((int(t[COMP]), i) for i, t in enumerate(_iter_rows(marks)))
        current = next(tag_rows, None)
        with BlockWriter(placed) as writer:
            for part in BlockReader(by_dest):
                rows = []
                for dest, src_pos in part.tolist():
                    while current is not None and current[0] < dest:
                        current = next(tag_rows, None)
                    if current is None or current[0] != dest:
                        raise CorruptSketchError(
                            f"component {dest} was merged into but holds no live sketch"
                        )
                    rows.append((current[1], src_pos))
                writer.append(np.array(rows, dtype=np.int64).reshape(-1, 2))
        tag_rows.close()
        by_dest.free()

        B = dev.block_words
        spare = (dev.ram.available - lw - 3 * B) // B
        cache = max(1, min(2 * (-(-lw // B) + 1), spare))
        with dev.ram.reserve(lw), BlockUpdater(live, cache_blocks=cache) as updater:
            for part in BlockReader(placed):
                for dest_pos, src_pos in part.tolist():
                    target = updater.read_record(dest_pos)
                    source = updater.read_record(src_pos)
                    body = target[1:].copy()
                    add_sketch_words(body, source[1:], self.params.prime)
                    target[1:] = body
                    updater.write_record(dest_pos, target)
        placed.free()

        fresh = dev.new_array(live.length, lw)
        chunk = self._live_chunk()
        with BlockWriter(fresh) as writer:
            for recs, tags in zip(
                BlockReader(live, chunk_records=chunk), BlockReader(marks, chunk_records=chunk)
            ):
                keep = tags[:, DEST] == tags[:, COMP]
                if keep.any():
                    writer.append(recs[keep])
        return fresh

    def _combine_phase(self, live, tags, rep_map):
        """Mark destinations in a parallel array, then move and sum sketches"""
        dev = self.dev
        if rep_map.length:
            marks, _ = ext_lookup(dev, tags, COMP, rep_map, DEST)
            tags.free()
        else:
            marks = tags
        if self.relocation == 'sort':
            fresh = self._relocate_sorted(live, marks)
        else:
            fresh = self._relocate_inplace(live, marks)
        marks.free()
        live.free()
        return fresh

    def run(self):
        dev = self.dev
        start = io_snapshot(dev)
        uf = BatchedUnionFind(dev, self.num_vertices)
        live = _initial_live(dev, self.sketches)
        rounds = 0
        while live.length and rounds < self.max_rounds:
            merges, tags, failed = self._sample_phase(live, rounds)
            self.failures += failed
            sampled = merges.length
            rep_map, merged = self._union_phase(merges, uf)
            live_before = live.length
            live = self._combine_phase(live, tags, rep_map)
            rep_map.free()
            rounds += 1
            logger.debug(
                "boruvka round %d: %d live components, %d sampled, %d merges, %d failures -> %d live",
                rounds, live_before, sampled, merged, failed, live.length,
            )

        cap_hit = live.length > 0
        if cap_hit:
            logger.warning(
                "boruvka stopped at the round cap (%d) with %d components still live; "
                "labels may be split", self.max_rounds, live.length,
            )
        live.free()
        labels = uf.labels()
        uf.free()
        io = io_snapshot(dev) - start
        return ConnectivityResult(
            labels=labels,
            forest=sorted(set(self.forest)),
            rounds=rounds,
            round_cap_hit=cap_hit,
            failures=self.failures,
            io=io,
            predicted_bound=extraction_bound(
                self.num_vertices, self.phi, dev.ram_words, dev.block_words
            ),
        )


def _iter_rows(arr):
    for chunk in BlockReader(arr):
        yield from chunk


def boruvka_extract(sketches, dev=None, **kwargs):
    """
    Spanning forest and component labels from a single-layer sketch array

    Args:
        sketches: SketchArray from IngestState.finalize()
        dev: BlockDevice (defaults to the array's device)
        **kwargs: max_rounds, merge_strategy, relocation

    Returns:
        ConnectivityResult
    """
    return BoruvkaExtractor(sketches, dev, **kwargs).run()


def connected_components(updates, num_vertices, dev, seed=1, c0=2.0, batch_capacity=None, **kwargs):
    """
    Ingest a dynamic edge stream and extract its components

    Returns:
        (ConnectivityResult, IngestStats)
    """
    scheme = GraphScheme(num_vertices, 1, seed=seed, c0=c0)
    sketches = ingest_stream(scheme, dev, updates, batch_capacity)
    try:
        return boruvka_extract(sketches, dev, **kwargs), sketches.stats
    finally:
        sketches.free()


def static_connected_components(edges, num_vertices, dev, seed=1, c0=2.0, **kwargs):
    """Components of an insert-only edge list (u, v) pairs"""
    updates = (EdgeUpdate.insert(u, v) for u, v in edges)
    result, _ = connected_components(updates, num_vertices, dev, seed, c0, **kwargs)
    return result
