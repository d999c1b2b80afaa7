"""
Tests for the simulated block device, RAM budget and block streams
"""
import numpy as np
import pytest

from conftest import make_device
from src.em.block_device import EmParams, create_device
from src.em.streams import BlockReader, BlockUpdater, BlockWriter
from src.utils.errors import InvalidParamsError, RamBudgetExceeded


class TestEmParams:
    def test_rejects_non_positive(self):
        with pytest.raises(InvalidParamsError):
            EmParams(0, 8)
        with pytest.raises(InvalidParamsError):
            EmParams(256, -8)

    def test_block_must_fit_four_times(self):
        with pytest.raises(InvalidParamsError):
            EmParams(64, 32)
        assert EmParams(128, 32).ram_blocks == 4

    def test_block_of_one_word_rejected(self):
        with pytest.raises(InvalidParamsError):
            EmParams(64, 1)

    def test_create_device_needs_params(self):
        with pytest.raises(InvalidParamsError):
            create_device((256, 8))


class TestExtArray:
    def test_full_block_writes_do_not_read(self, tiny_dev):
        arr = tiny_dev.new_array(10, 4)
        arr.write_records(0, np.arange(40).reshape(10, 4))
        assert tiny_dev.stats.blocks_written == 5
        assert tiny_dev.stats.blocks_read == 0
        assert arr.length == 10

    def test_random_read_charges_covered_blocks(self, tiny_dev):
        arr = tiny_dev.new_array(10, 4)
        arr.write_records(0, np.arange(40).reshape(10, 4))
        before = tiny_dev.stats.copy()
        got = arr.read_records(2, 3)
        assert got.tolist() == np.arange(8, 20).reshape(3, 4).tolist()
        assert (tiny_dev.stats - before).blocks_read == 2

    def test_partial_write_is_read_modify_write(self, tiny_dev):
        arr = tiny_dev.new_array(4, 4)
        arr.write_records(0, np.ones((4, 4)))
        before = tiny_dev.stats.copy()
        arr.write_words(3, [7, 7])
        delta = tiny_dev.stats - before
        assert delta.blocks_read == 1 and delta.blocks_written == 1
        assert arr.read_words(0, 6).tolist() == [1, 1, 1, 7, 7, 1]

    def test_write_past_capacity(self, tiny_dev):
        arr = tiny_dev.new_array(2, 4)
        with pytest.raises(InvalidParamsError):
            arr.write_records(1, np.zeros((2, 4)))

    def test_freed_extent_is_reused(self, tiny_dev):
        a = tiny_dev.new_array(16, 1)
        first = a.first_block
        a.free()
        b = tiny_dev.new_array(8, 1)
        assert b.first_block == first

    def test_memory_backend_returns_copies(self, tiny_dev):
        arr = tiny_dev.new_array(8, 1)
        arr.write_records(0, np.arange(8))
        block = arr.read_words(0, 8)
        block[:] = -1
        assert arr.read_words(0, 8).tolist() == list(range(8))

    def test_file_backing(self, tmp_path):
        device = make_device(256, 8, path=tmp_path / "disk.bin")
        arr = device.new_array(12, 2)
        arr.write_records(0, np.arange(24).reshape(12, 2))
        assert arr.read_records(5, 2).tolist() == [[10, 11], [12, 13]]
        device.close()


class TestRamBudget:
    def test_over_subscription_raises_and_rolls_back(self, tiny_dev):
        ram = tiny_dev.ram
        with pytest.raises(RamBudgetExceeded):
            ram.acquire(257)
        assert ram.in_use == 0

    def test_reserve_releases_on_error(self, tiny_dev):
        with pytest.raises(KeyError):
            with tiny_dev.ram.reserve(100):
                raise KeyError("boom")
        assert tiny_dev.ram.in_use == 0

    def test_peak_is_tracked(self, tiny_dev):
        with tiny_dev.ram.reserve(100):
            with tiny_dev.ram.reserve(50):
                pass
        assert tiny_dev.ram.peak == 150


class TestBlockStreams:
    def test_writer_then_reader(self, tiny_dev):
        arr = tiny_dev.new_array(30, 3)
        with BlockWriter(arr) as writer:
            for i in range(30):
                writer.append([[i, 2 * i, 3 * i]])
        assert arr.length == 30
        rows = np.concatenate(list(BlockReader(arr)))
        assert rows[:, 1].tolist() == [2 * i for i in range(30)]
        assert tiny_dev.ram.in_use == 0

    def test_reader_reads_each_block_once(self, tiny_dev):
        arr = tiny_dev.new_array(32, 2)
        arr.write_records(0, np.zeros((32, 2)))
        before = tiny_dev.stats.copy()
        list(BlockReader(arr))
        assert (tiny_dev.stats - before).blocks_read == 8

    def test_reader_subrange(self, tiny_dev):
        arr = tiny_dev.new_array(20, 1)
        arr.write_records(0, np.arange(20))
        got = np.concatenate(list(BlockReader(arr, 5, 13))).reshape(-1)
        assert got.tolist() == list(range(5, 13))

    def test_iter_words_splits_large_records(self, tiny_dev):
        arr = tiny_dev.new_array(2, 12)
        arr.write_records(0, np.arange(24).reshape(2, 12))
        pieces = list(BlockReader(arr).iter_words())
        assert [p[0] for p in pieces] == [0, 0, 1, 1]
        joined = np.concatenate([p[2] for p in pieces])
        assert joined.tolist() == list(range(24))

    def test_writer_overflow(self, tiny_dev):
        arr = tiny_dev.new_array(2, 2)
        with pytest.raises(InvalidParamsError):
            with BlockWriter(arr) as writer:
                writer.append(np.zeros((3, 2)))

    def test_updater_writes_back_on_close(self, tiny_dev):
        arr = tiny_dev.new_array(16, 2, length=16)
        with BlockUpdater(arr, cache_blocks=1) as updater:
            updater.write_record(0, [5, 6])
            updater.write_record(15, [7, 8])
            assert updater.read_record(0).tolist() == [5, 6]
        assert arr.read_records(0, 1).tolist() == [[5, 6]]
        assert arr.read_records(15, 1).tolist() == [[7, 8]]
        assert tiny_dev.ram.in_use == 0
