"""
Tests for environment configuration and the I/O report
"""
import json
import logging

import pytest

from src.em.block_device import EmParams, IoStats
from src.reports.io_report import build_io_report, format_io_report, write_io_report
from src.utils.config import DEFAULTS, configure_logging, default_machine, default_seed


class TestEnvironment:
    def test_defaults(self, monkeypatch):
        for name in DEFAULTS:
            monkeypatch.delenv(name, raising=False)
        assert default_seed() == 1
        assert default_machine() == (65536, 256)

    def test_overrides(self, monkeypatch):
        monkeypatch.setenv('SKETCH_SEED', '42')
        monkeypatch.setenv('SKETCH_RAM_WORDS', '8192')
        monkeypatch.setenv('SKETCH_BLOCK_WORDS', ' ')
        assert default_seed() == 42
        assert default_machine() == (8192, 256)

    def test_not_an_integer(self, monkeypatch):
        monkeypatch.setenv('SKETCH_SEED', 'twelve')
        with pytest.raises(ValueError, match="SKETCH_SEED"):
            default_seed()

    def test_non_positive_machine(self, monkeypatch):
        monkeypatch.setenv('SKETCH_BLOCK_WORDS', '0')
        with pytest.raises(ValueError, match="must be positive"):
            default_machine()


class TestLogging:
    def test_level_and_file(self, tmp_path):
        log_file = tmp_path / "sketch.log"
        configure_logging('debug', str(log_file))
        logging.getLogger('src.test').debug("hello")
        assert logging.getLogger().level == logging.DEBUG
        assert "hello" in log_file.read_text()
        configure_logging('WARNING')

    def test_unknown_level(self):
        with pytest.raises(ValueError, match="Unknown log level"):
            configure_logging('chatty')


def test_io_report(tmp_path):
    stages = {
        'ingest': (IoStats(blocks_read=30, blocks_written=20), 100.0),
        'extract': (IoStats(blocks_read=10, blocks_written=0), 50.0),
    }
    report = build_io_report('cc', EmParams(4096, 64), 500, 16, 240, stages)
    assert report['blocks_read'] == 40
    assert report['blocks_written'] == 20
    assert report['predicted_bound'] == 150.0
    assert report['measured_over_predicted'] == 0.4
    assert report['stages']['ingest']['predicted_bound'] == 100.0

    path = tmp_path / "reports" / "io.json"
    write_io_report(path, report)
    assert json.loads(path.read_text()) == report

    text = format_io_report(report)
    assert "I/O REPORT - CC" in text
    assert "M = 4096 words, B = 64 words" in text
