"""
Batched Stream Ingestion

Turns a dynamic stream into contiguous per-entity sketches on the block
device:
1. feed() expands each update into tagged copies and appends them to an
   on-device staging area (written B words at a time)
2. When staging reaches the batch capacity, flush_batch() routes the
   copies by vertex group with ext_permute, distributes them into
   per-group update buffers (a full buffer is applied to its group's
   sketches at once) and finally applies every non-empty buffer in one
   pass over buffers and sketches
3. finalize() flushes the residue and hands back the SketchArray

Sketches larger than M/4 words are applied window by window, a window
being one or more whole layers.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from src.em.block_device import IoStats
from src.em.primitives import ext_permute, ext_sort, from_numpy, io_snapshot
from src.em.streams import BlockReader, BlockUpdater, BlockWriter
from src.ingest.schemes import TARGET, GraphScheme, HypergraphScheme
from src.sketch.hashing import mix64
from src.sketch.l0_sampler import VertexSketch
from src.sketch.serialization import read_sketch_file, sketch_header, write_sketch_file
from src.utils.errors import CorruptSketchError, InvalidParamsError

logger = logging.getLogger(__name__)


def records_checksum(records):
    """Order-independent multiset checksum of tagged records (wrapping uint64 sum)"""
    if len(records) == 0:
        return 0
    cols = np.asarray(records, dtype=np.int64).astype(np.uint64)
    h = mix64(cols[:, 0])
    for j in range(1, cols.shape[1]):
        h = mix64(h ^ cols[:, j])
    with np.errstate(over='ignore'):
        return int(h.sum(dtype=np.uint64))


def _add_checksum(a, b):
    return (a + b) & 0xFFFFFFFFFFFFFFFF


@dataclass
class IngestStats:
    updates: int = 0
    tagged_copies: int = 0
    batches: int = 0
    overflow_flushes: int = 0
    applied_copies: int = 0
    staged_checksum: int = 0
    applied_checksum: int = 0
    io: IoStats = field(default_factory=IoStats)

    def as_dict(self):
        return {
            'updates': self.updates,
            'tagged_copies': self.tagged_copies,
            'batches': self.batches,
            'overflow_flushes': self.overflow_flushes,
            'blocks_read': self.io.blocks_read,
            'blocks_written': self.io.blocks_written,
        }


class SketchArray:
    """
    Handle to finalized sketches: entity i occupies words
    [i * phi, (i + 1) * phi) of `ext`
    """

    def __init__(self, ext, scheme, stats=None):
        self.ext = ext
        self.scheme = scheme
        self.stats = stats or IngestStats()

    @property
    def device(self):
        return self.ext.device

    @property
    def num_entities(self):
        return self.scheme.num_entities

    @property
    def entity_words(self):
        return self.scheme.entity_words

    def read_entity(self, entity):
        phi = self.entity_words
        return self.ext.read_words(entity * phi, phi)

    def entity_sketch(self, entity, layer=0):
        """VertexSketch of one layer of one entity (charged block reads)"""
        lo, hi = self.scheme.layer_span(layer)
        words = self.ext.read_words(entity * self.entity_words + lo, hi - lo)
        return VertexSketch.from_words(self.scheme.layer_params[layer], words)

    def to_numpy(self):
        """(num_entities, phi) copy of the whole array (charged scan)"""
        chunks = list(BlockReader(self.ext))
        if not chunks:
            return np.zeros((self.num_entities, self.entity_words), dtype=np.int64)
        return np.concatenate(chunks).reshape(self.num_entities, self.entity_words)

    def save(self, path):
        """Write header + body; supported for graph and hypergraph schemes"""
        scheme = self.scheme
        if isinstance(scheme, GraphScheme) and type(scheme) is GraphScheme:
            tag = scheme.tag
        elif isinstance(scheme, HypergraphScheme):
            tag = ()
        else:
            raise InvalidParamsError(f"{type(scheme).__name__} sketch arrays cannot be saved")
        header = sketch_header(
            scheme.layer_params[0],
            num_layers=scheme.num_layers,
            num_entities=scheme.num_entities,
            entity_words=scheme.entity_words,
            tag=tag,
        )
        write_sketch_file(path, header, (c.reshape(-1) for c in BlockReader(self.ext)))

    def free(self):
        self.ext.free()


def load_sketch_array(path, dev):
    """Read a saved sketch array onto `dev`"""
    info, body = read_sketch_file(path)
    params = info['params']
    if params.arity == 2:
        scheme = GraphScheme(
            params.num_vertices, info['num_layers'], seed=params.seed, c0=params.c0,
            tag=info['tag'],
        )
    else:
        scheme = HypergraphScheme(params.num_vertices, params.arity, params.seed, params.c0)
    if scheme.entity_words != info['entity_words']:
        raise CorruptSketchError("sketch file layout does not match its header params")
    ext = from_numpy(dev, body.reshape(info['num_entities'], info['entity_words']))
    return SketchArray(ext, scheme)


def apply_entity_records(ext, scheme, entity_lo, entity_hi, records, windows, chunk_records):
    """
    Apply tagged records (targets within [entity_lo, entity_hi)) to the
    contiguous sketches of that entity range, one window at a time
    """
    dev = ext.device
    phi = scheme.entity_words
    order = np.argsort(records[:, TARGET], kind='stable')
    records = records[order]
    for lo, hi in windows:
        if windows == [(0, phi)]:
            span = (entity_hi - entity_lo) * phi
            with dev.ram.reserve(span):
                words = ext.read_words(entity_lo * phi, span).reshape(-1, phi)
                for start in range(0, len(records), chunk_records):
                    part = records[start:start + chunk_records]
                    for entity in np.unique(part[:, TARGET]).tolist():
                        mine = part[part[:, TARGET] == entity]
                        scheme.apply(words[entity - entity_lo], 0, phi, mine)
                ext.write_words(entity_lo * phi, words.reshape(-1))
            continue
        for entity in np.unique(records[:, TARGET]).tolist():
            mine = records[records[:, TARGET] == entity]
            with dev.ram.reserve(hi - lo):
                buf = ext.read_words(entity * phi + lo, hi - lo)
                for start in range(0, len(mine), chunk_records):
                    scheme.apply(buf, lo, hi, mine[start:start + chunk_records])
                ext.write_words(entity * phi + lo, buf)


class IngestState:
    """
    Streaming ingestion of one sketch scheme onto one device

    Args:
        scheme: SketchScheme (graph, hypergraph, double cover, bucketed edges)
        dev: BlockDevice
        batch_capacity: Tagged copies per batch; defaults to
            num_entities * phi
    """

    def __init__(self, scheme, dev, batch_capacity=None):
        self.scheme = scheme
        self.dev = dev
        B = dev.block_words
        M = dev.ram_words
        self.phi = scheme.entity_words
        self.record_words = scheme.record_words
        self.windows = scheme.windows(M // 4)
        self.windowed = len(self.windows) > 1 or self.phi > M // 4
        self.group_size = 1 if self.windowed else max(1, B // self.phi)
        self.num_groups = -(-scheme.num_entities // self.group_size)
        self.buffer_records = max(1, self.phi // self.record_words)
        self.batch_capacity = batch_capacity or scheme.num_entities * self.phi
        if self.batch_capacity < 1:
            raise InvalidParamsError(f"batch capacity must be positive (got {self.batch_capacity})")
        if self.windowed:
            self.apply_chunk_records = max(1, (M // 8) // self.record_words)
        else:
            self.apply_chunk_records = self.buffer_records

        self.stats = IngestStats()
        self._finalized = False
        start = io_snapshot(dev)

        self.sketches = dev.new_array(scheme.num_entities, self.phi)
        zeros = np.zeros(B, dtype=np.int64)
        with BlockWriter(self.sketches) as writer:
            remaining = scheme.num_entities * self.phi
            while remaining:
                take = min(B, remaining)
                writer.append_words(zeros[:take])
                remaining -= take

        self.buffers = dev.new_array(
            self.num_groups * self.buffer_records, self.record_words,
            length=self.num_groups * self.buffer_records,
        )
        self.buffer_fill = np.zeros(self.num_groups, dtype=np.int64)

        self._new_staging()
        self.stats.io = io_snapshot(dev) - start
        logger.debug(
            "ingest state: entities=%d phi=%d group=%d buffers=%d x %d records, batch=%d, windowed=%s",
            scheme.num_entities, self.phi, self.group_size, self.num_groups,
            self.buffer_records, self.batch_capacity, self.windowed,
        )

    def _new_staging(self):
        self.staging = self.dev.new_array(self.batch_capacity, self.record_words)
        self._writer = BlockWriter(self.staging)
        self.staged = 0
        self._batch_checksum = 0

    @property
    def staging_length(self):
        return self.staged

    def feed(self, update):
        """Expand one update into tagged copies and stage them"""
        if self._finalized:
            raise InvalidParamsError("feed() after finalize()")
        records = self.scheme.expand(update)
        self.stats.updates += 1
        if len(records) == 0:
            return
        if self.staged + len(records) > self.batch_capacity:
            self.flush_batch()
        start = io_snapshot(self.dev)
        self._writer.append(records)
        self.staged += len(records)
        self.stats.tagged_copies += len(records)
        checksum = records_checksum(records)
        self._batch_checksum = _add_checksum(self._batch_checksum, checksum)
        self.stats.staged_checksum = _add_checksum(self.stats.staged_checksum, checksum)
        self.stats.io = self.stats.io + (io_snapshot(self.dev) - start)
        if self.staged >= self.batch_capacity:
            self.flush_batch()

    def feed_many(self, updates):
        for update in updates:
            self.feed(update)

    def flush_batch(self):
        """Route the staged batch into buffers and apply it to the sketches"""
        if self.staged == 0:
            return
        start = io_snapshot(self.dev)
        self._writer.close()
        overflows_before = self.stats.overflow_flushes
        applied_before = self.stats.applied_checksum

        g = self.group_size
        routed = ext_permute(
            self.dev, self.staging, target=lambda c: c[:, TARGET] // g, bijective=False
        )
        self.staging.free()
        self._distribute(routed)
        routed.free()
        self._apply_buffers()

        batch_applied = (self.stats.applied_checksum - applied_before) & 0xFFFFFFFFFFFFFFFF
        assert batch_applied == self._batch_checksum, "tagged updates lost or applied twice"
        self.stats.batches += 1
        delta = io_snapshot(self.dev) - start
        self.stats.io = self.stats.io + delta
        logger.debug(
            "batch %d: %d copies, %d overflow flushes, %d reads / %d writes",
            self.stats.batches, self.staged, self.stats.overflow_flushes - overflows_before,
            delta.blocks_read, delta.blocks_written,
        )
        self._new_staging()

    def _group_range(self, group):
        lo = group * self.group_size
        return lo, min(self.scheme.num_entities, lo + self.group_size)

    def _apply_to_group(self, group, records):
        lo, hi = self._group_range(group)
        apply_entity_records(
            self.sketches, self.scheme, lo, hi, records, self.windows, self.apply_chunk_records
        )
        self.stats.applied_copies += len(records)
        self.stats.applied_checksum = _add_checksum(
            self.stats.applied_checksum, records_checksum(records)
        )

    def _distribute(self, routed):
        """Append routed copies to group buffers; a full buffer with more input pending is applied now"""
        cap = self.buffer_records
        rw = self.record_words
        cache = -(-rw // self.dev.block_words) + 1
        with BlockUpdater(self.buffers, cache_blocks=cache) as updater:
            for chunk in BlockReader(routed):
                groups = chunk[:, TARGET] // self.group_size
                for i, group in enumerate(groups.tolist()):
                    fill = int(self.buffer_fill[group])
                    if fill == cap:
                        self._flush_buffer(group, fill, updater.read)
                        self.stats.overflow_flushes += 1
                        fill = 0
                    updater.write_record(group * cap + fill, chunk[i])
                    self.buffer_fill[group] = fill + 1

    def _flush_buffer(self, group, fill, read_words):
        """Apply `fill` buffered records of a group, a RAM-sized chunk at a time"""
        cap = self.buffer_records
        rw = self.record_words
        step = self.apply_chunk_records
        for start in range(0, fill, step):
            count = min(step, fill - start)
            with self.dev.ram.reserve(count * rw):
                held = read_words((group * cap + start) * rw, count * rw).reshape(count, rw)
                self._apply_to_group(group, held)

    def _apply_buffers(self):
        """One pass over buffers and sketches in group order"""
        for group in np.flatnonzero(self.buffer_fill).tolist():
            self._flush_buffer(group, int(self.buffer_fill[group]), self.buffers.read_words)
            self.buffer_fill[group] = 0

    def finalize(self):
        """Flush residual staging and return the SketchArray"""
        if self._finalized:
            raise InvalidParamsError("finalize() called twice")
        self.flush_batch()
        start = io_snapshot(self.dev)
        self._writer.close()
        self.staging.free()
        self.buffers.free()
        self._finalized = True
        self.stats.io = self.stats.io + (io_snapshot(self.dev) - start)
        assert self.stats.staged_checksum == self.stats.applied_checksum
        return SketchArray(self.sketches, self.scheme, self.stats)


def ingest_stream(scheme, dev, updates, batch_capacity=None):
    """Feed every update and finalize"""
    state = IngestState(scheme, dev, batch_capacity)
    state.feed_many(updates)
    return state.finalize()


def direct_apply(scheme, updates):
    """
    In-memory oracle: apply every update straight to host arrays

    Returns:
        (num_entities, phi) int64 array
    """
    out = np.zeros((scheme.num_entities, scheme.entity_words), dtype=np.int64)
    for update in updates:
        records = scheme.expand(update)
        for rec in records:
            scheme.apply(out[int(rec[TARGET])], 0, scheme.entity_words, rec.reshape(1, -1))
    return out


def merge_sketch_arrays(a, b, dev=None):
    """
    Sum two sketch arrays built with identical schemes and seeds over
    disjoint parts of a stream; one simultaneous scan
    """
    if not a.scheme.compatible(b.scheme):
        raise InvalidParamsError("cannot merge sketch arrays with different schemes or seeds")
    dev = dev or a.device
    if b.device is not dev or a.device is not dev:
        raise InvalidParamsError("both sketch arrays must live on the merging device")
    phi = a.entity_words
    out = dev.new_array(a.num_entities, phi)
    per_chunk = max(1, dev.block_words // phi)
    with BlockWriter(out) as writer:
        for left, right in zip(
            BlockReader(a.ext, chunk_records=per_chunk), BlockReader(b.ext, chunk_records=per_chunk)
        ):
            writer.append(a.scheme.add_entities(left.copy(), right))
    stats = IngestStats(
        updates=a.stats.updates + b.stats.updates,
        tagged_copies=a.stats.tagged_copies + b.stats.tagged_copies,
    )
    return SketchArray(out, a.scheme, stats)


def split_layers(sketches, dev=None):
    """
    One SketchArray per layer of a stacked scheme

    Entities are streamed a block at a time; layers are copied in passes of
    as many layers as half the RAM can hold writer blocks for.
    """
    dev = dev or sketches.device
    scheme = sketches.scheme
    k = scheme.num_layers
    lw = scheme.layer_words
    h = scheme.header_words
    per_pass = max(1, (dev.ram_words // 2) // dev.block_words - 2)
    outputs = []
    for first in range(0, k, per_pass):
        layers = list(range(first, min(k, first + per_pass)))
        arrays = [dev.new_array(scheme.num_entities, lw) for _ in layers]
        writers = [BlockWriter(arr) for arr in arrays]
        try:
            for _, offset, words in BlockReader(sketches.ext).iter_words():
                end = offset + len(words)
                for layer, writer in zip(layers, writers):
                    lo = max(offset, h + layer * lw)
                    hi = min(end, h + (layer + 1) * lw)
                    if lo < hi:
                        writer.append_words(words[lo - offset:hi - offset])
        finally:
            for writer in writers:
                writer.close()
        outputs.extend(
            SketchArray(arr, scheme.layer_scheme(layer)) for layer, arr in zip(layers, arrays)
        )
    return outputs


def apply_sorted_records(sketches, records_arr):
    """
    Apply tagged records sorted by target to a sketch array in one pass

    Used for bulk deletions of already-extracted edges. An entity whose
    records straddle block boundaries is still read and written once.
    """
    dev = sketches.device
    scheme = sketches.scheme
    windows = scheme.windows(dev.ram_words // 4)
    chunk_records = max(1, (dev.ram_words // 8) // scheme.record_words)
    current, parts, held = None, [], 0

    def flush():
        apply_entity_records(
            sketches.ext, scheme, current, current + 1, np.concatenate(parts), windows, chunk_records
        )

    for chunk in BlockReader(records_arr):
        targets = chunk[:, TARGET]
        for entity in np.unique(targets).tolist():
            if parts and (entity != current or held >= chunk_records):
                flush()
                parts, held = [], 0
            current = entity
            mine = chunk[targets == entity]
            parts.append(mine)
            held += len(mine)
    if parts:
        flush()


def bulk_apply(sketches, records):
    """
    Stage host records on the device, sort them by target once and apply
    them to a SketchArray or to every array of a list
    """
    targets = list(sketches) if isinstance(sketches, (list, tuple)) else [sketches]
    if len(records) == 0 or not targets:
        return
    dev = targets[0].device
    staged = from_numpy(dev, records)
    ordered = ext_sort(dev, staged, key=TARGET, free_input=True)
    try:
        for target in targets:
            apply_sorted_records(target, ordered)
    finally:
        ordered.free()
