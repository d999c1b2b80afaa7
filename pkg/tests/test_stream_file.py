"""
Tests for the stream file format and legality checking
"""
import pytest

from src.data.stream_file import (
    StreamHeader,
    parse_stream,
    read_stream,
    surviving_edge_array,
    validate_stream,
    write_stream,
)
from src.data.stream_generators import (
    random_dynamic_stream,
    reorder_inserts,
    weighted_stream,
    clique_stream,
)
from src.em.primitives import to_numpy
from src.ingest.schemes import EdgeUpdate
from src.utils.errors import InvalidParamsError, StreamFormatError

from conftest import surviving_pairs


def _lines(text):
    return text.strip('\n').splitlines()


class TestParse:
    def test_basic(self):
        stream = parse_stream(_lines("""
# a path with one churned edge
H 4
I 0 1
I 2 1   # reversed endpoints are fine
D 0 1

I 0 1
I 2 3
"""))
        assert stream.num_vertices == 4
        assert stream.header == StreamHeader(4)
        assert len(stream) == 5
        assert stream.updates[1] == EdgeUpdate((1, 2), 1, 1.0)
        assert stream.updates[2].delta == -1
        assert stream.line_numbers == [3, 4, 5, 7, 8]

    def test_weighted_header(self):
        stream = parse_stream(["H 3 8", "I 0 1 2.5", "I 1 2"])
        assert stream.header.max_weight == 8
        assert [u.weight for u in stream.updates] == [2.5, 1.0]

    def test_hypergraph_header(self):
        stream = parse_stream(["H 6 1 3", "I 4 0 2", "I 1 5", "D 0 2 4"])
        assert stream.header.hypergraph
        assert stream.updates[0].vertices == (0, 2, 4)
        assert stream.updates[2].key == (0, 2, 4)

    def test_weighted_delete_inherits_weight(self):
        stream = parse_stream(["H 3 8", "I 0 1 5", "D 1 0", "I 0 1 2", "D 0 1 2"])
        assert [u.weight for u in stream.updates] == [5.0, 5.0, 2.0, 2.0]

    @pytest.mark.parametrize("text,line", [
        ("I 0 1", 1),
        ("H 3\nX 0 1", 2),
        ("H 3\nI 0 3", 2),
        ("H 3\nI 1 1", 2),
        ("H 3\nI 0", 2),
        ("H 3\nI 0 a", 2),
        ("H 3\nI 0 1\nH 3", 3),
        ("H 3 4\nI 0 1 5", 2),
        ("H 3 4\nI 0 1 0.5", 2),
        ("H 0", 1),
        ("H 3 0.5", 1),
        ("H 3 1 1", 1),
        ("H 5 1 3\nI 0 1 2 3", 2),
        ("H", 1),
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(StreamFormatError) as err:
            parse_stream(text.splitlines())
        assert err.value.line_number == line
        assert str(err.value).startswith(f"line {line}:")

    def test_missing_header(self):
        with pytest.raises(StreamFormatError, match="missing header"):
            parse_stream(["# only a comment", ""])


class TestFiles:
    def test_write_then_read(self, tmp_path):
        updates = weighted_stream(10, 50, 6, seed=3)
        header = StreamHeader(10, 6)
        path = tmp_path / "nested" / "w.txt"
        write_stream(path, header, updates, comment="weighted\nseed 3")
        text = path.read_text()
        assert text.startswith("# weighted\n# seed 3\nH 10 6\n")
        stream = read_stream(path)
        assert stream.header == header
        assert stream.updates == updates

    def test_hypergraph_lines_have_no_weight(self, tmp_path):
        header = StreamHeader(6, 1, 3)
        path = tmp_path / "h.txt"
        write_stream(path, header, [EdgeUpdate.insert(0, 2, 4)])
        assert path.read_text().splitlines() == ["H 6 1 3", "I 0 2 4"]


class TestValidate:
    def test_legal_stream(self, dev):
        stream = parse_stream(["H 20"] + [
            f"{'I' if u.is_insert else 'D'} {u.vertices[0]} {u.vertices[1]}"
            for u in random_dynamic_stream(20, 200, seed=2)
        ])
        validate_stream(stream, dev)

    @pytest.mark.parametrize("lines,line,message", [
        (["H 4", "I 0 1", "I 2 3", "I 1 0"], 4, "already present"),
        (["H 4", "I 0 1", "D 2 3"], 3, "not present"),
        (["H 4", "I 0 1", "D 0 1", "D 1 0"], 4, "not present"),
        (["H 4 9", "I 0 1 3", "D 0 1 4"], 3, "weight"),
    ])
    def test_violations(self, dev, lines, line, message):
        stream = parse_stream(lines)
        with pytest.raises(StreamFormatError, match=message) as err:
            validate_stream(stream, dev)
        assert err.value.line_number == line

    def test_empty_stream(self, dev):
        validate_stream(parse_stream(["H 4"]), dev)

    def test_many_runs_on_a_tiny_machine(self, tiny_dev):
        updates = random_dynamic_stream(12, 300, seed=6)
        stream = parse_stream(["H 12"] + [
            f"{'I' if u.is_insert else 'D'} {u.vertices[0]} {u.vertices[1]}" for u in updates
        ])
        validate_stream(stream, tiny_dev)


def test_surviving_edge_array(dev):
    updates = random_dynamic_stream(15, 120, seed=4)
    survivors = surviving_edge_array(dev, updates)
    assert [tuple(r) for r in to_numpy(survivors).tolist()] == surviving_pairs(updates)


class TestReorder:
    def test_orders_keep_the_edge_set(self):
        updates = clique_stream(6)
        for order in ('random', 'sorted', 'reverse', 'star'):
            reordered = reorder_inserts(updates, order, seed=2)
            assert sorted(u.key for u in reordered) == sorted(u.key for u in updates)

    def test_star_groups_by_larger_endpoint(self):
        keys = [u.key for u in reorder_inserts(clique_stream(4), 'star')]
        assert keys == [(0, 3), (1, 3), (2, 3), (0, 2), (1, 2), (0, 1)]

    def test_rejects_deletions(self):
        with pytest.raises(InvalidParamsError):
            reorder_inserts([EdgeUpdate.insert(0, 1), EdgeUpdate.delete(0, 1)])
