"""
Simulated External-Memory Machine

A block device with I/O counters and a logical RAM budget:
- RAM of M machine words (64-bit), disk accessed in blocks of B words
- Every block read/write is charged to IoStats
- Live RAM buffers are registered with RamBudget, which refuses to go over M

The device can be backed by host memory (sparse dict of blocks) or by one
flat block-aligned file; I/O counts are identical either way.
"""
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.utils.errors import InvalidParamsError, RamBudgetExceeded

logger = logging.getLogger(__name__)

WORD_DTYPE = np.dtype('<i8')
WORD_BYTES = WORD_DTYPE.itemsize


@dataclass(frozen=True)
class EmParams:
    """
    Machine parameters, fixed for a device's lifetime

    Args:
        ram_words: M, RAM size in machine words
        block_words: B, block size in machine words
    """
    ram_words: int
    block_words: int

    def __post_init__(self):
        if self.ram_words <= 0 or self.block_words <= 0:
            raise InvalidParamsError(
                f"M and B must be positive (got M={self.ram_words}, B={self.block_words})"
            )
        if self.block_words < 2:
            raise InvalidParamsError(f"B must be at least 2 words (got {self.block_words})")
        if self.block_words > self.ram_words // 4:
            raise InvalidParamsError(
                f"B must be at most M/4 (got M={self.ram_words}, B={self.block_words})"
            )

    @property
    def ram_blocks(self):
        return self.ram_words // self.block_words


@dataclass
class IoStats:
    """Block transfer counters; only io_reset() zeroes them"""
    blocks_read: int = 0
    blocks_written: int = 0

    @property
    def total(self):
        return self.blocks_read + self.blocks_written

    def copy(self):
        return IoStats(self.blocks_read, self.blocks_written)

    def __sub__(self, other):
        return IoStats(
            self.blocks_read - other.blocks_read,
            self.blocks_written - other.blocks_written,
        )

    def __add__(self, other):
        return IoStats(
            self.blocks_read + other.blocks_read,
            self.blocks_written + other.blocks_written,
        )

    def as_dict(self):
        return {'blocks_read': self.blocks_read, 'blocks_written': self.blocks_written}


class RamBudget:
    """
    Book-keeping for words held in simulated RAM buffers
    """

    def __init__(self, capacity):
        self.capacity = capacity
        self.in_use = 0
        self.peak = 0

    @property
    def available(self):
        return self.capacity - self.in_use

    def acquire(self, words):
        self.in_use += words
        self.peak = max(self.peak, self.in_use)
        if __debug__ and self.in_use > self.capacity:
            in_use = self.in_use
            self.in_use -= words
            raise RamBudgetExceeded(
                f"simulated RAM over budget: {in_use} words live, M={self.capacity}"
            )

    def release(self, words):
        self.in_use -= words
        assert self.in_use >= 0, "released more RAM than was acquired"

    @contextmanager
    def reserve(self, words):
        self.acquire(words)
        try:
            yield
        finally:
            self.release(words)


class MemoryBackend:
    """Host-memory block store; never-written blocks read as zeros"""

    def __init__(self, block_words):
        self.block_words = block_words
        self._blocks = {}

    def read(self, block_id):
        block = self._blocks.get(block_id)
        if block is None:
            return np.zeros(self.block_words, dtype=WORD_DTYPE)
        return block.copy()

    def write(self, block_id, data):
        self._blocks[block_id] = np.array(data, dtype=WORD_DTYPE, copy=True)

    def discard(self, first_block, num_blocks):
        for block_id in range(first_block, first_block + num_blocks):
            self._blocks.pop(block_id, None)

    def close(self):
        self._blocks.clear()


class FileBackend:
    """One flat, block-aligned file per device"""

    def __init__(self, block_words, path):
        self.block_words = block_words
        self.path = Path(path)
        self._fh = open(self.path, 'w+b')
        self._block_bytes = block_words * WORD_BYTES

    def read(self, block_id):
        self._fh.seek(block_id * self._block_bytes)
        raw = self._fh.read(self._block_bytes)
        block = np.zeros(self.block_words, dtype=WORD_DTYPE)
        if raw:
            got = np.frombuffer(raw, dtype=WORD_DTYPE)
            block[:len(got)] = got
        return block

    def write(self, block_id, data):
        self._fh.seek(block_id * self._block_bytes)
        self._fh.write(np.asarray(data, dtype=WORD_DTYPE).tobytes())

    def discard(self, first_block, num_blocks):
        zeros = np.zeros(self.block_words, dtype=WORD_DTYPE).tobytes()
        for block_id in range(first_block, first_block + num_blocks):
            self._fh.seek(block_id * self._block_bytes)
            self._fh.write(zeros)

    def close(self):
        if not self._fh.closed:
            self._fh.close()


class BlockDevice:
    """
    Block-addressed disk plus a logical RAM budget

    Single-threaded; a device may be handed to another thread but never
    shared concurrently.
    """

    def __init__(self, params, path=None):
        self.params = params
        self.stats = IoStats()
        self.ram = RamBudget(params.ram_words)
        if path is None:
            self._backend = MemoryBackend(params.block_words)
        else:
            self._backend = FileBackend(params.block_words, path)
        self._next_block = 0
        self._free_extents = []
        logger.debug(
            "device created: M=%d B=%d backing=%s",
            params.ram_words, params.block_words, 'file' if path else 'memory',
        )

    @property
    def block_words(self):
        return self.params.block_words

    @property
    def ram_words(self):
        return self.params.ram_words

    def allocate(self, num_words):
        """
        Reserve a block-aligned extent

        Returns:
            (first_block, num_blocks)
        """
        num_blocks = max(1, -(-num_words // self.block_words))
        for i, (first, count) in enumerate(self._free_extents):
            if count >= num_blocks:
                if count == num_blocks:
                    self._free_extents.pop(i)
                else:
                    self._free_extents[i] = (first + num_blocks, count - num_blocks)
                return first, num_blocks
        first = self._next_block
        self._next_block += num_blocks
        return first, num_blocks

    def release_extent(self, first_block, num_blocks):
        self._backend.discard(first_block, num_blocks)
        self._free_extents.append((first_block, num_blocks))

    def read_block(self, block_id):
        self.stats.blocks_read += 1
        return self._backend.read(block_id)

    def write_block(self, block_id, data):
        self.stats.blocks_written += 1
        self._backend.write(block_id, data)

    def new_array(self, capacity, record_words, length=0):
        """Allocate an ExtArray able to hold `capacity` records"""
        if record_words <= 0:
            raise InvalidParamsError(f"record_words must be positive (got {record_words})")
        capacity = max(0, int(capacity))
        first, num_blocks = self.allocate(capacity * record_words)
        return ExtArray(self, first, num_blocks, capacity, record_words, length)

    def close(self):
        self._backend.close()


class ExtArray:
    """
    Fixed-width records resident on a BlockDevice

    Element access goes through block reads and writes charged to the
    device's IoStats. Word i of the array lives in block
    first_block + i // B at offset i % B.
    """

    def __init__(self, device, first_block, num_blocks, capacity, record_words, length=0):
        self.device = device
        self.first_block = first_block
        self.extent_blocks = num_blocks
        self.capacity = capacity
        self.record_words = record_words
        self.length = length
        self._freed = False

    def __len__(self):
        return self.length

    def __repr__(self):
        return (
            f"ExtArray(length={self.length}, record_words={self.record_words}, "
            f"first_block={self.first_block})"
        )

    @property
    def num_words(self):
        return self.length * self.record_words

    @property
    def num_blocks(self):
        return -(-self.num_words // self.device.block_words)

    def read_words(self, start_word, count):
        """Random-access read of `count` words, charging every covered block"""
        B = self.device.block_words
        if count <= 0:
            return np.zeros(0, dtype=WORD_DTYPE)
        first = start_word // B
        last = (start_word + count - 1) // B
        parts = [self.device.read_block(self.first_block + b) for b in range(first, last + 1)]
        data = np.concatenate(parts)
        offset = start_word - first * B
        return data[offset:offset + count]

    def write_words(self, start_word, data):
        """
        Random-access write; boundary blocks that are only partly covered
        are read first (read-modify-write)
        """
        B = self.device.block_words
        data = np.asarray(data, dtype=WORD_DTYPE).reshape(-1)
        count = len(data)
        if count == 0:
            return
        if start_word + count > self.capacity * self.record_words:
            raise InvalidParamsError(f"write past the end of {self!r}")
        first = start_word // B
        last = (start_word + count - 1) // B
        pos = 0
        for b in range(first, last + 1):
            lo = max(start_word, b * B) - b * B
            hi = min(start_word + count, (b + 1) * B) - b * B
            if lo == 0 and hi == B:
                block = data[pos:pos + B]
            else:
                block = self.device.read_block(self.first_block + b)
                block[lo:hi] = data[pos:pos + hi - lo]
            self.device.write_block(self.first_block + b, block)
            pos += hi - lo

    def read_records(self, start, count):
        words = self.read_words(start * self.record_words, count * self.record_words)
        return words.reshape(-1, self.record_words)

    def write_records(self, start, records):
        records = np.asarray(records, dtype=WORD_DTYPE).reshape(-1, self.record_words)
        self.write_words(start * self.record_words, records)
        self.length = max(self.length, start + len(records))

    def free(self):
        if not self._freed:
            self.device.release_extent(self.first_block, self.extent_blocks)
            self._freed = True


def create_device(params, path=None):
    """
    Create an empty device with zeroed IoStats

    Args:
        params: EmParams (validated on construction)
        path: Optional file path for file backing

    Returns:
        BlockDevice
    """
    if not isinstance(params, EmParams):
        raise InvalidParamsError("create_device expects EmParams")
    return BlockDevice(params, path)
