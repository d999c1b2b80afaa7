"""
Buffered block streams over an ExtArray

Readers and writers hold their buffers inside the device's RamBudget, so
every pass that uses them is counted both in I/O and in simulated RAM.
"""
from collections import OrderedDict

import numpy as np

from src.em.block_device import WORD_DTYPE
from src.utils.errors import InvalidParamsError


class BlockReader:
    """
    Sequential reader; every block in the range is read exactly once

    Args:
        arr: ExtArray to read
        start: First record (inclusive)
        stop: Last record (exclusive); defaults to arr.length
        chunk_records: Records per yielded chunk; defaults to one block's worth
    """

    def __init__(self, arr, start=0, stop=None, chunk_records=None):
        self.arr = arr
        self.dev = arr.device
        self.start = start
        self.stop = arr.length if stop is None else stop
        rw = arr.record_words
        B = self.dev.block_words
        self.chunk_records = chunk_records or max(1, B // rw)
        self.ram_words = B + self.chunk_records * rw

    def __iter__(self):
        return self.iter_records()

    def iter_records(self):
        """Yield (k, record_words) int64 chunks in order"""
        if self.start >= self.stop:
            return
        rw = self.arr.record_words
        B = self.dev.block_words
        chunk_words = self.chunk_records * rw
        start_w = self.start * rw
        end_w = self.stop * rw
        first_block = start_w // B
        last_block = (end_w - 1) // B

        self.dev.ram.acquire(self.ram_words)
        try:
            pending = []
            pending_words = 0
            for b in range(first_block, last_block + 1):
                block = self.dev.read_block(self.arr.first_block + b)
                lo = max(start_w, b * B) - b * B
                hi = min(end_w, (b + 1) * B) - b * B
                pending.append(block[lo:hi])
                pending_words += hi - lo
                while pending_words >= chunk_words or (b == last_block and pending_words):
                    data = np.concatenate(pending)
                    take = min(chunk_words, (len(data) // rw) * rw)
                    if take == 0:
                        break
                    yield data[:take].reshape(-1, rw)
                    rest = data[take:]
                    pending = [rest] if len(rest) else []
                    pending_words = len(rest)
        finally:
            self.dev.ram.release(self.ram_words)

    def iter_words(self):
        """
        Yield (record_index, word_offset, words) pieces one block at a time,
        for records too large to hold whole in RAM
        """
        if self.start >= self.stop:
            return
        rw = self.arr.record_words
        B = self.dev.block_words
        start_w = self.start * rw
        end_w = self.stop * rw
        self.dev.ram.acquire(B)
        try:
            for b in range(start_w // B, (end_w - 1) // B + 1):
                block = self.dev.read_block(self.arr.first_block + b)
                lo = max(start_w, b * B)
                hi = min(end_w, (b + 1) * B)
                pos = lo
                while pos < hi:
                    rec = pos // rw
                    rec_end = min(hi, (rec + 1) * rw)
                    yield rec, pos - rec * rw, block[pos - b * B:rec_end - b * B]
                    pos = rec_end
        finally:
            self.dev.ram.release(B)


class BlockWriter:
    """
    Sequential appender holding one block of RAM

    The final partial block is written on close(); arr.length is updated
    to the number of records appended.
    """

    def __init__(self, arr):
        self.arr = arr
        self.dev = arr.device
        self.block_words = self.dev.block_words
        self._buf = np.zeros(self.block_words, dtype=WORD_DTYPE)
        self._fill = 0
        self._next_block = 0
        self._words = 0
        self._closed = False
        self.dev.ram.acquire(self.block_words)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    @property
    def records_written(self):
        return self._words // self.arr.record_words

    def append(self, records):
        flat = np.asarray(records, dtype=WORD_DTYPE).reshape(-1)
        if len(flat) % self.arr.record_words:
            raise InvalidParamsError(
                f"appending {len(flat)} words to an array of {self.arr.record_words}-word records"
            )
        self.append_words(flat)

    def append_words(self, flat):
        """Append raw words; records may be split across calls"""
        flat = np.asarray(flat, dtype=WORD_DTYPE).reshape(-1)
        if self._words + len(flat) > self.arr.capacity * self.arr.record_words:
            raise InvalidParamsError(f"append overflows capacity of {self.arr!r}")
        B = self.block_words
        pos = 0
        while pos < len(flat):
            take = min(B - self._fill, len(flat) - pos)
            self._buf[self._fill:self._fill + take] = flat[pos:pos + take]
            self._fill += take
            pos += take
            if self._fill == B:
                self._emit()
        self._words += len(flat)

    def _emit(self):
        if self._fill < self.block_words:
            self._buf[self._fill:] = 0
        self.dev.write_block(self.arr.first_block + self._next_block, self._buf)
        self._next_block += 1
        self._fill = 0

    def close(self):
        if self._closed:
            return
        if self._fill:
            self._emit()
        self.arr.length = self.records_written
        self.dev.ram.release(self.block_words)
        self._closed = True


class BlockUpdater:
    """
    Random-access read/modify/write through a small LRU block cache

    Dirty blocks are written back on eviction and on close().

    Args:
        arr: ExtArray to update in place
        cache_blocks: Number of blocks held in RAM
    """

    def __init__(self, arr, cache_blocks=1):
        self.arr = arr
        self.dev = arr.device
        self.cache_blocks = max(1, cache_blocks)
        self._cache = OrderedDict()
        self._dirty = set()
        self._closed = False
        self.dev.ram.acquire(self.cache_blocks * self.dev.block_words)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def _load(self, b):
        if b in self._cache:
            self._cache.move_to_end(b)
            return self._cache[b]
        if len(self._cache) >= self.cache_blocks:
            old, block = self._cache.popitem(last=False)
            if old in self._dirty:
                self.dev.write_block(self.arr.first_block + old, block)
                self._dirty.discard(old)
        block = self.dev.read_block(self.arr.first_block + b)
        self._cache[b] = block
        return block

    def _load_fresh(self, b):
        """Cache slot for a block that will be overwritten entirely (no read)"""
        if b in self._cache:
            self._cache.move_to_end(b)
            return self._cache[b]
        if len(self._cache) >= self.cache_blocks:
            old, block = self._cache.popitem(last=False)
            if old in self._dirty:
                self.dev.write_block(self.arr.first_block + old, block)
                self._dirty.discard(old)
        block = np.zeros(self.dev.block_words, dtype=WORD_DTYPE)
        self._cache[b] = block
        return block

    def read(self, start_word, count):
        B = self.dev.block_words
        out = np.empty(count, dtype=WORD_DTYPE)
        pos = 0
        while pos < count:
            w = start_word + pos
            b, off = divmod(w, B)
            take = min(B - off, count - pos)
            out[pos:pos + take] = self._load(b)[off:off + take]
            pos += take
        return out

    def write(self, start_word, data):
        B = self.dev.block_words
        data = np.asarray(data, dtype=WORD_DTYPE).reshape(-1)
        pos = 0
        while pos < len(data):
            w = start_word + pos
            b, off = divmod(w, B)
            take = min(B - off, len(data) - pos)
            block = self._load_fresh(b) if take == B else self._load(b)
            block[off:off + take] = data[pos:pos + take]
            self._dirty.add(b)
            pos += take

    def read_record(self, index):
        rw = self.arr.record_words
        return self.read(index * rw, rw)

    def write_record(self, index, record):
        self.write(index * self.arr.record_words, record)

    def close(self):
        if self._closed:
            return
        for b, block in self._cache.items():
            if b in self._dirty:
                self.dev.write_block(self.arr.first_block + b, block)
        self._cache.clear()
        self._dirty.clear()
        self.dev.ram.release(self.cache_blocks * self.dev.block_words)
        self._closed = True
