"""
External-memory primitives: scan, sort, permute

Every other package routes external data through these functions, so
their block counts are the I/O cost of the whole system.
"""
import heapq
import logging

import numpy as np

from src.em.block_device import WORD_DTYPE
from src.em.cost_model import scan_ios, sort_ios
from src.em.streams import BlockReader, BlockUpdater, BlockWriter
from src.utils.errors import InvalidParamsError, PermutationError

logger = logging.getLogger(__name__)


def io_snapshot(dev):
    """Copy of the device's IoStats"""
    return dev.stats.copy()


def io_reset(dev):
    dev.stats.blocks_read = 0
    dev.stats.blocks_written = 0


def from_numpy(dev, records, capacity=None):
    """
    Write an in-memory (n, w) array to the device (charged as a scan write)
    """
    records = np.asarray(records, dtype=WORD_DTYPE)
    if records.ndim == 1:
        records = records.reshape(-1, 1)
    n, rw = records.shape
    arr = dev.new_array(capacity if capacity is not None else n, rw)
    chunk = max(1, dev.block_words // rw) * 8
    with BlockWriter(arr) as writer:
        for lo in range(0, n, chunk):
            writer.append(records[lo:lo + chunk])
    return arr


def to_numpy(arr):
    """Read a whole ExtArray into host memory (charged as a scan read)"""
    chunks = list(BlockReader(arr))
    if not chunks:
        return np.zeros((0, arr.record_words), dtype=WORD_DTYPE)
    return np.concatenate(chunks)


def _key_matrix(records, key):
    """Normalise a sort key into an (n, k) int64 matrix, most significant first"""
    if callable(key):
        k = key(records)
        if isinstance(k, (tuple, list)):
            k = np.column_stack([np.asarray(c, dtype=WORD_DTYPE) for c in k])
        k = np.asarray(k, dtype=WORD_DTYPE)
        return k.reshape(len(records), -1)
    if isinstance(key, (int, np.integer)):
        return records[:, [int(key)]]
    return records[:, list(key)]


def _stable_order(keys):
    # np.lexsort treats the last row as primary
    return np.lexsort(keys.T[::-1])


def ext_scan(dev, arr, transform=None, out_record_words=None, materialize=True):
    """
    Apply `transform` chunk-wise over an array

    Args:
        dev: BlockDevice
        arr: Input ExtArray
        transform: Callable mapping an (k, w) chunk to an (k, w') chunk;
            None means identity
        out_record_words: w' (defaults to the input width)
        materialize: When False the transform runs for side effects only
            and no output is written

    Returns:
        The output ExtArray (or arr itself when not materialized)
    """
    rw_out = out_record_words or arr.record_words
    if not materialize:
        for chunk in BlockReader(arr):
            if transform is not None:
                transform(chunk)
        return arr

    out = dev.new_array(arr.length, rw_out)
    with BlockWriter(out) as writer:
        for chunk in BlockReader(arr):
            result = chunk if transform is None else transform(chunk)
            result = np.asarray(result, dtype=WORD_DTYPE).reshape(-1, rw_out)
            if len(result) != len(chunk):
                raise InvalidParamsError("ext_scan transform must preserve record count")
            writer.append(result)
    return out


def _write_run(dev, records):
    run = dev.new_array(len(records), records.shape[1])
    with BlockWriter(run) as writer:
        writer.append(records)
    return run


def _merge_runs(dev, runs, key, record_words):
    """k-way merge of sorted runs; ties resolve by run order (stability)"""
    total = sum(r.length for r in runs)
    out = dev.new_array(total, record_words)

    def tagged(run_idx, run):
        seq = 0
        for chunk in BlockReader(run):
            keys = _key_matrix(chunk, key)
            for i in range(len(chunk)):
                yield tuple(keys[i].tolist()), run_idx, seq, chunk[i]
                seq += 1

    flush_every = max(1, dev.block_words // record_words)
    with BlockWriter(out) as writer:
        pending = []
        for _, _, _, row in heapq.merge(*(tagged(i, r) for i, r in enumerate(runs))):
            pending.append(row)
            if len(pending) >= flush_every:
                writer.append(np.stack(pending))
                pending = []
        if pending:
            writer.append(np.stack(pending))
    return out


def ext_sort(dev, arr, key=0, free_input=False):
    """
    Stable multiway merge sort

    Run formation uses all RAM not held by live buffers (minus one input
    and one output block); merging uses fan-in floor(M/(2B)), capped by
    what free RAM can hold.

    Args:
        dev: BlockDevice
        arr: Input ExtArray
        key: Column index, sequence of column indices (most significant
            first), or a vectorised callable returning keys for a chunk
        free_input: Release the input extent afterwards

    Returns:
        Sorted ExtArray
    """
    rw = arr.record_words
    B = dev.block_words
    if arr.length == 0:
        return dev.new_array(0, rw)

    run_words = dev.ram.available - 2 * B
    run_records = run_words // rw
    if run_records < 1:
        raise InvalidParamsError(
            f"not enough free RAM to sort {rw}-word records "
            f"({dev.ram.available} words available)"
        )

    runs = []
    reader = BlockReader(arr, chunk_records=run_records)
    for chunk in reader:
        order = _stable_order(_key_matrix(chunk, key))
        runs.append(_write_run(dev, chunk[order]))
    if free_input:
        arr.free()

    reader_words = B + rw * max(1, B // rw)
    fan_in = min(dev.ram_words // (2 * B), (dev.ram.available - B) // reader_words)
    if len(runs) > 1 and fan_in < 2:
        raise InvalidParamsError("not enough free RAM for a two-way merge")

    passes = 0
    while len(runs) > 1:
        merged = []
        for lo in range(0, len(runs), fan_in):
            group = runs[lo:lo + fan_in]
            if len(group) == 1:
                merged.append(group[0])
                continue
            merged.append(_merge_runs(dev, group, key, rw))
            for run in group:
                run.free()
        runs = merged
        passes += 1

    logger.debug("ext_sort: %d records x %d words, %d merge passes", arr.length, rw, passes)
    return runs[0]


def choose_permute_strategy(dev, records, record_words):
    """
    'direct' when placing records one by one is predicted cheaper than
    sorting them, else 'sort'
    """
    B = dev.block_words
    direct = 2 * records * (-(-record_words // B)) + scan_ios(records * record_words, B)
    by_sort = sort_ios(records * (record_words + 1), dev.ram_words, B) + 2 * scan_ios(
        records * (record_words + 1), B
    )
    return 'direct' if direct < by_sort else 'sort'


def _targets(chunk, target):
    if callable(target):
        return np.asarray(target(chunk), dtype=WORD_DTYPE).reshape(-1)
    return chunk[:, int(target)]


def ext_permute(dev, arr, target, bijective=True, strategy='auto'):
    """
    Reorder records so that each lands at its target slot

    With bijective=True, target must be a bijection on [len] and output
    slot i holds the record mapped to i. With bijective=False, target is a
    bucket id and records are grouped by bucket, stable within a bucket.

    Args:
        dev: BlockDevice
        arr: Input ExtArray
        target: Column index or vectorised callable giving each record's slot
        bijective: Require a permutation (raise PermutationError otherwise)
        strategy: 'auto', 'direct' or 'sort'

    Returns:
        Permuted ExtArray
    """
    n = arr.length
    rw = arr.record_words
    if n == 0:
        return dev.new_array(0, rw)
    if strategy == 'auto':
        strategy = choose_permute_strategy(dev, n, rw)
    if strategy not in ('direct', 'sort'):
        raise InvalidParamsError(f"unknown permute strategy {strategy!r}")

    if not bijective:
        return _bucket_route(dev, arr, target, strategy)
    if strategy == 'direct':
        return _permute_direct(dev, arr, target)
    return _permute_by_sort(dev, arr, target)


def _permute_direct(dev, arr, target):
    n = arr.length
    rw = arr.record_words
    out = dev.new_array(n, rw, length=n)
    # the seen-bitmap is host-side metadata, like the device's allocator
    seen = np.zeros(n, dtype=bool)
    cache = -(-rw // dev.block_words) + 1
    with BlockUpdater(out, cache_blocks=cache) as updater:
        for chunk in BlockReader(arr):
            slots = _targets(chunk, target)
            for rec, slot in zip(chunk, slots):
                slot = int(slot)
                if slot < 0 or slot >= n or seen[slot]:
                    out.free()
                    raise PermutationError(f"target slot {slot} is out of range or repeated")
                seen[slot] = True
                updater.write_record(slot, rec)
    return out


def _permute_by_sort(dev, arr, target):
    n = arr.length
    rw = arr.record_words

    def attach(chunk):
        return np.column_stack([chunk, _targets(chunk, target)])

    tagged = ext_scan(dev, arr, attach, out_record_words=rw + 1)
    ordered = ext_sort(dev, tagged, key=rw, free_input=True)

    expected = [0]

    def strip(chunk):
        slots = chunk[:, rw]
        want = np.arange(expected[0], expected[0] + len(chunk), dtype=WORD_DTYPE)
        if not np.array_equal(slots, want):
            raise PermutationError("permutation target is not a bijection on [len]")
        expected[0] += len(chunk)
        return chunk[:, :rw]

    try:
        out = ext_scan(dev, ordered, strip, out_record_words=rw)
    finally:
        ordered.free()
    assert out.length == n
    return out


def _bucket_route(dev, arr, target, strategy):
    """Group records by bucket id with counting placement or a stable sort"""
    rw = arr.record_words
    if strategy == 'direct':
        counts = {}
        for chunk in BlockReader(arr):
            ids, freq = np.unique(_targets(chunk, target), return_counts=True)
            for b, c in zip(ids.tolist(), freq.tolist()):
                counts[b] = counts.get(b, 0) + c
        cache = -(-rw // dev.block_words) + 1
        fits = 2 * len(counts) + (cache + 1) * dev.block_words + rw <= dev.ram.available
        if len(counts) <= dev.ram_words // 4 and fits:
            dev.ram.acquire(2 * len(counts))
            try:
                offsets = {}
                running = 0
                for b in sorted(counts):
                    offsets[b] = running
                    running += counts[b]
                out = dev.new_array(arr.length, rw, length=arr.length)
                with BlockUpdater(out, cache_blocks=cache) as updater:
                    for chunk in BlockReader(arr):
                        for rec, b in zip(chunk, _targets(chunk, target).tolist()):
                            updater.write_record(offsets[b], rec)
                            offsets[b] += 1
                return out
            finally:
                dev.ram.release(2 * len(counts))
        logger.debug("bucket routing: %d buckets exceed M/4, sorting instead", len(counts))

    if callable(target):
        return _permute_by_sort_key(dev, arr, target)
    return ext_sort(dev, arr, key=int(target))


def _permute_by_sort_key(dev, arr, target):
    rw = arr.record_words

    def attach(chunk):
        return np.column_stack([chunk, _targets(chunk, target)])

    tagged = ext_scan(dev, arr, attach, out_record_words=rw + 1)
    ordered = ext_sort(dev, tagged, key=rw, free_input=True)
    try:
        return ext_scan(dev, ordered, lambda c: c[:, :rw], out_record_words=rw)
    finally:
        ordered.free()


def ext_lookup(dev, arr, key_col, table, out_col, default=None):
    """
    Sort-merge join: replace column `out_col` of each record with the value
    stored under the record's `key_col` in `table`

    Args:
        arr: ExtArray sorted by key_col
        table: Two-column ExtArray (key, value) sorted by key, keys unique
        default: Value for keys missing from the table; None leaves the
            record unchanged

    Returns:
        (ExtArray, number of records whose out_col changed)
    """
    rw = arr.record_words
    out = dev.new_array(arr.length, rw)
    changed = 0

    def table_rows():
        for chunk in BlockReader(table):
            for k, v in chunk.tolist():
                yield k, v

    rows = table_rows()
    current = next(rows, None)
    with BlockWriter(out) as writer:
        for chunk in BlockReader(arr):
            result = chunk.copy()
            for i, k in enumerate(chunk[:, key_col].tolist()):
                while current is not None and current[0] < k:
                    current = next(rows, None)
                if current is not None and current[0] == k:
                    value = current[1]
                elif default is not None:
                    value = default
                else:
                    continue
                if result[i, out_col] != value:
                    changed += 1
                    result[i, out_col] = value
            writer.append(result)
    return out, changed
