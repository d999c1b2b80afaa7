"""
End-to-end tests for the graph_sketch and generate_stream command lines
"""
import json

import pytest

from src.data.stream_file import StreamHeader, read_stream, write_stream
from src.data.stream_generators import (
    clique_stream,
    cycle_stream,
    path_stream,
    random_dynamic_stream,
)
from src.ingest.schemes import EdgeUpdate
from src.scripts import generate_stream
from src.scripts.graph_sketch import (
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_PRECONDITION,
    EXIT_USAGE,
    format_value,
    in_band,
    in_upper_band,
    main,
)

MACHINE = ["-M", "4096", "-B", "64"]
BIG_MACHINE = ["-M", "32768", "-B", "64"]


def _stream(tmp_path, updates, V, name="stream.txt", **header):
    path = tmp_path / name
    write_stream(path, StreamHeader(V, **header), updates)
    return str(path)


def _summary(path):
    return dict(line.split(' ', 1) for line in path.read_text().splitlines())


def test_format_value():
    assert format_value(True) == 'true'
    assert format_value(2.0) == '2'
    assert format_value(2.5) == '2.500000'
    assert format_value(7) == '7'


class TestConnectedComponents:
    def test_path(self, tmp_path):
        stream = _stream(tmp_path, path_stream(8), 8)
        out, labels, forest = tmp_path / "out.txt", tmp_path / "labels.txt", tmp_path / "forest.txt"
        code = main(["cc", stream, "--out", str(out), "--labels", str(labels),
                     "--forest", str(forest), *MACHINE])
        assert code == EXIT_OK
        assert _summary(out)['components'] == '1'
        assert labels.read_text().splitlines() == [f"{v} 0" for v in range(8)]
        assert forest.read_text().splitlines() == [f"{v} {v + 1}" for v in range(7)]

    def test_summary_to_stdout(self, tmp_path, capsys):
        stream = _stream(tmp_path, clique_stream(3) + clique_stream(3, offset=3), 7)
        assert main(["cc", stream, "--oracle-check", *MACHINE]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert "components 3" in lines
        assert "oracle_agreement true" in lines

    def test_reproducible(self, tmp_path):
        stream = _stream(tmp_path, random_dynamic_stream(30, 150, seed=3), 30)
        outputs = []
        for run in range(2):
            forest = tmp_path / f"forest{run}.txt"
            labels = tmp_path / f"labels{run}.txt"
            assert main(["cc", stream, "--seed", "11", "--forest", str(forest),
                         "--labels", str(labels), "--out", str(tmp_path / "o.txt"), *MACHINE]) == EXIT_OK
            outputs.append((forest.read_text(), labels.read_text()))
        assert outputs[0] == outputs[1]

    def test_hooking_and_file_backed_device(self, tmp_path):
        stream = _stream(tmp_path, random_dynamic_stream(20, 60, seed=5), 20)
        out = tmp_path / "out.txt"
        code = main(["cc", stream, "--merge-strategy", "hooking", "--device-file",
                     str(tmp_path / "disk.bin"), "--oracle-check", "--out", str(out), *MACHINE])
        assert code == EXIT_OK
        assert _summary(out)['oracle_agreement'] == 'true'


def test_io_report_scales_linearly(tmp_path):
    reads = []
    for n in (3840, 7680):
        stream = _stream(tmp_path, random_dynamic_stream(16, n, seed=1), 16, name=f"s{n}.txt")
        report_path = tmp_path / f"io{n}.json"
        code = main(["cc", stream, "--seed", "1", "--io-report", str(report_path),
                     "--out", str(tmp_path / "out.txt"), *MACHINE])
        assert code == EXIT_OK
        report = json.loads(report_path.read_text())
        assert report['N'] == n
        assert report['phi'] == 240
        assert report['M'] == 4096 and report['B'] == 64
        assert report['blocks_read'] >= report['stages']['ingest']['blocks_read']
        reads.append(report['stages']['ingest']['blocks_read'])
    assert 1.8 <= reads[1] / reads[0] <= 2.2


def test_validate_stage_in_report(tmp_path, capsys):
    stream = _stream(tmp_path, path_stream(6), 6)
    report_path = tmp_path / "io.json"
    code = main(["bipartite", stream, "--validate", "--io-report", str(report_path),
                 "--out", str(tmp_path / "out.txt"), *MACHINE])
    assert code == EXIT_OK
    report = json.loads(report_path.read_text())
    assert set(report['stages']) == {'validate', 'ingest', 'extract'}
    assert report['stages']['validate']['blocks_read'] > 0
    assert "I/O REPORT - BIPARTITE" in capsys.readouterr().err
    assert _summary(tmp_path / "out.txt")['bipartite'] == 'true'


class TestCommands:
    def test_kconn(self, tmp_path):
        stream = _stream(tmp_path, cycle_stream(10), 10)
        out, cert = tmp_path / "out.txt", tmp_path / "cert.txt"
        code = main(["kconn", stream, "-k", "3", "--certificate", str(cert), "--oracle-check",
                     "--out", str(out), *BIG_MACHINE])
        assert code == EXIT_OK
        summary = _summary(out)
        assert summary['edge_connectivity'] == '2'
        assert summary['saturated'] == 'false'
        assert summary['oracle_agreement'] == 'true'
        assert len(cert.read_text().splitlines()) == 10

    def test_mincut_on_a_cycle(self, tmp_path):
        stream = _stream(tmp_path, cycle_stream(12), 12)
        out, cut = tmp_path / "out.txt", tmp_path / "cut.txt"
        code = main(["mincut", stream, "-k", "4", "--recover-edges", str(cut),
                     "--out", str(out), *BIG_MACHINE])
        assert code == EXIT_OK
        summary = _summary(out)
        assert summary['min_cut'] == '2'
        assert summary['cut_edges'] == '2'
        assert len(cut.read_text().splitlines()) == 2

    def test_mincut_default_constants(self, tmp_path):
        stream = _stream(tmp_path, cycle_stream(8), 8)
        out = tmp_path / "out.txt"
        code = main(["mincut", stream, "--epsilon", "0.5", "--oracle-check", "--out", str(out), *BIG_MACHINE])
        assert code == EXIT_OK
        summary = _summary(out)
        assert summary["min_cut"] == "2"
        assert summary["level"] == "0"
        assert summary["k"] == "192"
        assert summary["oracle_agreement"] == "true"

    def test_sparsify(self, tmp_path):
        stream = _stream(tmp_path, cycle_stream(8), 8)
        out, sparse = tmp_path / "out.txt", tmp_path / "sparse.txt"
        code = main(["sparsify", stream, "-k", "4", "--st", "0", "4", "--st", "1", "2",
                     "--sparsifier", str(sparse), "--out", str(out), *BIG_MACHINE])
        assert code == EXIT_OK
        summary = _summary(out)
        assert summary['st_cut_0_4'] == '2'
        assert summary['st_cut_1_2'] == '2'
        assert len(sparse.read_text().splitlines()) == 8

    def test_mstweight_uses_header_weight(self, tmp_path):
        updates = [EdgeUpdate.insert(0, 1, weight=1), EdgeUpdate.insert(1, 2, weight=3)]
        stream = _stream(tmp_path, updates, 3, max_weight=4)
        out = tmp_path / "out.txt"
        code = main(["mstweight", stream, "--epsilon", "1", "--oracle-check", "--out", str(out), *MACHINE])
        assert code == EXIT_OK
        summary = _summary(out)
        assert summary['mst_weight'] == '5'
        assert summary['thresholds'] == '3'
        assert summary['oracle_agreement'] == 'true'

    def test_hypercc(self, tmp_path):
        updates = [EdgeUpdate.insert(0, 1, 2), EdgeUpdate.insert(3, 4)]
        stream = _stream(tmp_path, updates, 6, arity=3)
        out, labels, forest = tmp_path / "out.txt", tmp_path / "labels.txt", tmp_path / "forest.txt"
        code = main(["hypercc", stream, "--labels", str(labels), "--forest", str(forest),
                     "--out", str(out), *MACHINE])
        assert code == EXIT_OK
        assert _summary(out)['components'] == '3'
        assert labels.read_text().split() == "0 0 1 0 2 0 3 3 4 3 5 5".split()
        assert len(forest.read_text().splitlines()) == 5

    def test_densest(self, tmp_path):
        stream = _stream(tmp_path, clique_stream(8), 16)
        out, vertices = tmp_path / "out.txt", tmp_path / "v.txt"
        code = main(["densest", stream, "--no-precondition", "--allow-overflow", "--sampling-rate", "1",
                     "--vertices", str(vertices), "--out", str(out), *BIG_MACHINE])
        assert code == EXIT_OK
        assert _summary(out)['density'] == '3.500000'
        assert vertices.read_text().split() == [str(v) for v in range(8)]


class TestExitCodes:
    def test_parse_error(self, tmp_path, capsys):
        path = tmp_path / "bad.txt"
        path.write_text("H 4\nI 0 9\n")
        assert main(["cc", str(path), *MACHINE]) == EXIT_PARSE
        assert "line 2" in capsys.readouterr().err

    def test_illegal_stream_with_validate(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("H 4\nI 0 1\nI 1 0\n")
        assert main(["cc", str(path), "--validate", *MACHINE]) == EXIT_PARSE

    def test_precondition(self, tmp_path):
        stream = _stream(tmp_path, clique_stream(4), 16)
        assert main(["densest", stream, *BIG_MACHINE]) == EXIT_PRECONDITION

    def test_bucket_overflow(self, tmp_path):
        stream = _stream(tmp_path, path_stream(4), 16)
        assert main(["densest", stream, "--no-precondition", *BIG_MACHINE]) == EXIT_INTERNAL

    def test_kconn_needs_k(self, tmp_path):
        stream = _stream(tmp_path, path_stream(4), 4)
        assert main(["kconn", stream, *MACHINE]) == EXIT_USAGE

    def test_bad_machine(self, tmp_path):
        stream = _stream(tmp_path, path_stream(4), 4)
        assert main(["cc", stream, "-M", "128", "-B", "64"]) == EXIT_USAGE

    def test_sketch_too_large_for_ram(self, tmp_path):
        stream = _stream(tmp_path, path_stream(16), 16)
        assert main(["cc", stream, "-M", "256", "-B", "8"]) == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert main(["cc", str(tmp_path / "nope.txt"), *MACHINE]) == EXIT_USAGE

    def test_hypercc_arity_below_header(self, tmp_path):
        stream = _stream(tmp_path, [EdgeUpdate.insert(0, 1, 2)], 4, arity=3)
        assert main(["hypercc", stream, "-r", "2", *MACHINE]) == EXIT_USAGE

    def test_usage_errors_exit_with_one(self):
        with pytest.raises(SystemExit) as exit_info:
            main(["frobnicate", "x.txt"])
        assert exit_info.value.code == EXIT_USAGE



class TestGenerateStream:
    @pytest.mark.parametrize("kind,extra", [
        ("random", ["--updates", "40"]),
        ("weighted", ["--updates", "40", "--max-weight", "5"]),
        ("hyper", ["--updates", "20", "--arity", "3"]),
        ("dense", ["--updates", "10", "--clique-size", "5"]),
        ("cycle", []),
    ])
    def test_kinds_round_trip(self, tmp_path, kind, extra):
        path = tmp_path / f"{kind}.txt"
        assert generate_stream.main([kind, "--vertices", "12", "--seed", "4", "--out", str(path), *extra]) == 0
        stream = read_stream(path)
        assert stream.num_vertices == 12
        assert len(stream) > 0
        if kind == 'hyper':
            assert stream.header.arity == 3
        if kind == 'weighted':
            assert stream.header.max_weight == 5

    def test_generator_errors(self, tmp_path):
        code = generate_stream.main(["cycle", "--vertices", "2", "--out", str(tmp_path / "c.txt")])
        assert code == 1


class TestOracleBands:
    def test_min_cut_never_below_exact(self):
        assert in_upper_band(10, 10, 0.5)
        assert in_upper_band(15, 10, 0.5)
        assert not in_upper_band(9, 10, 0.5)
        assert not in_upper_band(16, 10, 0.5)

    def test_two_sided(self):
        assert in_band(5, 10, 0.5)
        assert in_band(15, 10, 0.5)
        assert not in_band(4.9, 10, 0.5)
        assert not in_band(15.1, 10, 0.5)
