"""
Stream File Format

Line-oriented text:

    # comment
    H <V> [W] [r]        header, first non-comment line
    I u v [w]            insert an edge, optional weight (default 1)
    D u v [w]            delete it again (weighted streams repeat w)
    I u1 u2 ... us       hyperedge insert when the header gives r > 2
    D u1 u2 ... us

Everything after '#' on a line is ignored. Parse errors carry the 1-based
line number of the offending line.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.em.primitives import ext_sort, from_numpy
from src.em.streams import BlockReader, BlockWriter
from src.ingest.schemes import EdgeUpdate, weight_bits
from src.sketch.hyper import encode_hyperedge, normalize_hyperedge
from src.utils.errors import StreamFormatError, VertexRangeError

logger = logging.getLogger(__name__)

OPS = {'I': 1, 'D': -1}


@dataclass(frozen=True)
class StreamHeader:
    """
    Args:
        num_vertices: V
        max_weight: W, largest edge weight (1 for unweighted streams)
        arity: r, largest hyperedge cardinality (2 for graphs)
    """
    num_vertices: int
    max_weight: float = 1.0
    arity: int = 2

    @property
    def hypergraph(self):
        return self.arity > 2

    def format(self):
        parts = ['H', str(self.num_vertices)]
        if self.max_weight != 1 or self.arity != 2:
            parts.append(_format_number(self.max_weight))
        if self.arity != 2:
            parts.append(str(self.arity))
        return ' '.join(parts)


@dataclass
class StreamFile:
    """A parsed stream: header, updates in order and their source lines"""
    header: StreamHeader
    updates: list = field(default_factory=list)
    line_numbers: list = field(default_factory=list)

    @property
    def num_vertices(self):
        return self.header.num_vertices

    def __len__(self):
        return len(self.updates)


def _format_number(x):
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def _int(token, what, line_number):
    try:
        return int(token)
    except ValueError:
        raise StreamFormatError(f"{what} {token!r} is not an integer", line_number)


def _float(token, what, line_number):
    try:
        return float(token)
    except ValueError:
        raise StreamFormatError(f"{what} {token!r} is not a number", line_number)


def parse_header(tokens, line_number):
    if tokens[0] != 'H':
        raise StreamFormatError(f"expected header 'H <V> [W] [r]', got {tokens[0]!r}", line_number)
    if not 2 <= len(tokens) <= 4:
        raise StreamFormatError("header takes 1 to 3 fields: H <V> [W] [r]", line_number)
    num_vertices = _int(tokens[1], "vertex count", line_number)
    if num_vertices < 1:
        raise StreamFormatError(f"vertex count must be positive (got {num_vertices})", line_number)
    max_weight = _float(tokens[2], "max weight", line_number) if len(tokens) > 2 else 1.0
    if max_weight < 1:
        raise StreamFormatError(f"max weight must be >= 1 (got {max_weight})", line_number)
    arity = _int(tokens[3], "arity", line_number) if len(tokens) > 3 else 2
    if arity < 2:
        raise StreamFormatError(f"arity must be at least 2 (got {arity})", line_number)
    return StreamHeader(num_vertices, max_weight, arity)


def parse_update(tokens, header, line_number, live_weights=None):
    """
    One update line

    A weighted deletion written as "D u v" takes the weight of the live
    insert recorded in `live_weights` (edge key -> weight), when given.

    Returns:
        EdgeUpdate

    Raises:
        StreamFormatError: Bad opcode, bad field, vertex out of range or
            weight outside [1, W]
    """
    op = tokens[0]
    if op not in OPS:
        raise StreamFormatError(f"unknown operation {op!r} (expected I or D)", line_number)
    fields = tokens[1:]
    weight = 1.0
    if header.hypergraph:
        vertices = [_int(t, "vertex", line_number) for t in fields]
    else:
        if len(fields) not in (2, 3):
            raise StreamFormatError(f"{op} takes 'u v [w]', got {len(fields)} fields", line_number)
        vertices = [_int(t, "vertex", line_number) for t in fields[:2]]
        if len(fields) == 3:
            weight = _float(fields[2], "weight", line_number)
            if not 1 <= weight <= header.max_weight:
                raise StreamFormatError(
                    f"weight {weight} outside [1, {_format_number(header.max_weight)}]", line_number
                )
    try:
        members = normalize_hyperedge(vertices, header.num_vertices, header.arity)
    except VertexRangeError as e:
        raise StreamFormatError(str(e), line_number)
    if live_weights is not None:
        if OPS[op] > 0:
            live_weights[members] = weight
        elif len(fields) == 2:
            weight = live_weights.pop(members, weight)
        else:
            live_weights.pop(members, None)
    return EdgeUpdate(members, OPS[op], weight)


def parse_stream(lines):
    """
    Parse stream text

    Args:
        lines: Iterable of lines (an open file works)

    Returns:
        StreamFile
    """
    header = None
    stream = None
    live_weights = None
    for line_number, raw in enumerate(lines, start=1):
        tokens = raw.split('#', 1)[0].split()
        if not tokens:
            continue
        if header is None:
            header = parse_header(tokens, line_number)
            stream = StreamFile(header)
            if header.max_weight != 1 and not header.hypergraph:
                live_weights = {}
            continue
        if tokens[0] == 'H':
            raise StreamFormatError("a second header line", line_number)
        stream.updates.append(parse_update(tokens, header, line_number, live_weights))
        stream.line_numbers.append(line_number)
    if header is None:
        raise StreamFormatError("missing header line 'H <V> [W] [r]'")
    logger.debug("parsed stream: V=%d, r=%d, %d updates", header.num_vertices, header.arity, len(stream))
    return stream


def read_stream(path):
    """Parse a stream file from disk"""
    with open(path, 'r') as f:
        return parse_stream(f)


def format_update(update, header):
    parts = ['I' if update.is_insert else 'D']
    parts.extend(str(v) for v in update.vertices)
    if not header.hypergraph and header.max_weight != 1:
        parts.append(_format_number(update.weight))
    return ' '.join(parts)


def write_stream(path, header, updates, comment=None):
    """Write updates in the stream file format"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        if comment:
            for line in comment.splitlines():
                f.write(f"# {line}\n")
        f.write(header.format() + '\n')
        for update in updates:
            f.write(format_update(update, header) + '\n')


def validate_stream(stream, dev):
    """
    Check stream legality on the device at sorting cost

    Every update becomes a record [edge key, line, delta, weight bits];
    after sorting by (key, line) one scan verifies that each edge
    alternates insert/delete starting with an insert, and that a deletion
    repeats the weight of the live insert.

    Raises:
        StreamFormatError: With the line number of the first violation found
    """
    V = stream.num_vertices
    if not stream.updates:
        return
    rows = np.array(
        [
            [encode_hyperedge(u.key, V), line, u.delta, weight_bits(u.weight)]
            for u, line in zip(stream.updates, stream.line_numbers)
        ],
        dtype=np.int64,
    )
    staged = from_numpy(dev, rows)
    ordered = ext_sort(dev, staged, key=(0, 1), free_input=True)
    try:
        current, live, live_weight = None, False, None
        for chunk in BlockReader(ordered):
            for key, line, delta, bits in chunk.tolist():
                if key != current:
                    current, live, live_weight = key, False, None
                if delta > 0:
                    if live:
                        raise StreamFormatError("insert of an edge that is already present", line)
                    live, live_weight = True, bits
                else:
                    if not live:
                        raise StreamFormatError("delete of an edge that is not present", line)
                    if bits != live_weight:
                        raise StreamFormatError("delete does not repeat the inserted weight", line)
                    live, live_weight = False, None
    finally:
        ordered.free()
    logger.debug("stream of %d updates is legal", len(stream))


def surviving_edge_array(dev, updates):
    """
    Edges with positive net multiplicity, as an ExtArray of sorted (u, v)
    records; computed by sorting [u, v, delta] records and summing runs
    """
    rows = np.array([[*u.key, u.delta] for u in updates if len(u.vertices) == 2], dtype=np.int64)
    staged = from_numpy(dev, rows.reshape(-1, 3))
    ordered = ext_sort(dev, staged, key=(0, 1), free_input=True)
    survivors = dev.new_array(ordered.length, 2)
    with BlockWriter(survivors) as writer:
        current, total = None, 0
        for chunk in BlockReader(ordered):
            for u, v, delta in chunk.tolist():
                if (u, v) != current:
                    if current is not None and total > 0:
                        writer.append([current])
                    current, total = (u, v), 0
                total += delta
        if current is not None and total > 0:
            writer.append([current])
    ordered.free()
    return survivors
