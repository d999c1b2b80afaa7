"""
Smoke test for the I/O scaling sweep
"""
import pandas as pd

from src.automation.io_scaling_sweep import IoScalingSweep, main, parse_machine


def test_parse_machine():
    assert parse_machine("4096:64") == (4096, 64)


def test_sweep_grid(tmp_path):
    log_file = tmp_path / "sweep.log"
    sweep = IoScalingSweep(16, [500, 1000], [(4096, 64), (256, 8)], seed=2, log_file=str(log_file))
    frame = sweep.run()
    # the 256-word machine cannot hold one sketch
    assert len(frame) == 2
    assert len(sweep.errors) == 2
    assert set(frame['N']) == {500, 1000}
    assert (frame['phi'] == 240).all()
    assert (frame['ingest_read'] > 0).all()
    assert "I/O SCALING SWEEP - Summary" in log_file.read_text()


def test_main_writes_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["--vertices", "12", "--updates", "200", "--machine", "4096:64",
                 "--seed", "3", "--out", str(out), "--log-file", str(tmp_path / "s.log")])
    assert code == 0
    frame = pd.read_csv(out)
    assert list(frame['N']) == [200]
    assert frame.loc[0, 'components'] >= 1
