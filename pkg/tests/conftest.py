"""
Shared fixtures: small simulated machines and stream helpers
"""
import pytest

from src.analytics import oracles
from src.em.block_device import EmParams, create_device


def make_device(ram_words=4096, block_words=64, path=None):
    return create_device(EmParams(ram_words, block_words), path)


@pytest.fixture
def dev():
    """M = 2^12, B = 2^6: enough for single-layer sketches up to V = 256"""
    device = make_device()
    yield device
    device.close()


@pytest.fixture
def big_dev():
    """M = 2^15, B = 2^6 for stacked k-connectivity and bucketed sketches"""
    device = make_device(1 << 15, 64)
    yield device
    device.close()


@pytest.fixture
def tiny_dev():
    """M = 256, B = 8: forces multi-run sorts and many merge passes"""
    device = make_device(256, 8)
    yield device
    device.close()


def surviving_pairs(updates):
    """Sorted list of edges alive after the stream"""
    return sorted(oracles.surviving_edges(updates))
