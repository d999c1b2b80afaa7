"""
Graph Sketching Command Line

Reads a stream file, runs one pipeline on a simulated external-memory
machine of M words of RAM and B-word blocks, and writes the result files.

Usage:
    python src/scripts/graph_sketch.py cc stream.txt --labels labels.txt --forest forest.txt
    python src/scripts/graph_sketch.py bipartite stream.txt
    python src/scripts/graph_sketch.py mstweight weighted.txt --epsilon 0.25
    python src/scripts/graph_sketch.py kconn stream.txt -k 4 --certificate cert.txt
    python src/scripts/graph_sketch.py mincut stream.txt --epsilon 0.5 --recover-edges cut.txt
    python src/scripts/graph_sketch.py sparsify stream.txt --st 0 5 --sparsifier sparse.txt
    python src/scripts/graph_sketch.py hypercc hyper.txt --labels labels.txt
    python src/scripts/graph_sketch.py densest stream.txt --epsilon 0.5 --vertices dense.txt

Every command takes --out (summary file, default stdout), -M/-B, --seed,
--validate, --io-report PATH and --oracle-check.

Exit codes: 0 success, 1 usage or parameters, 2 stream parse or legality,
3 precondition, 4 sampling saturation, bucket overflow or internal error.
"""
import sys
import argparse
from dataclasses import dataclass, field
from pathlib import Path

project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import networkx as nx
import pandas as pd

from src.analytics import oracles
from src.analytics.bipartite import BipartiteTester
from src.analytics.connectivity import boruvka_extract
from src.analytics.cuts import DEFAULT_CK, SkeletonStack, approx_min_cut, recover_cut_edges
from src.analytics.densest_subgraph import DensestConfig, DensestSubgraphSketch
from src.analytics.k_connectivity import KSketch, extract_certificate, min_cut_upto_k
from src.analytics.mst_weight import MstConfig, MstWeightEstimator
from src.analytics.sparsifier import build_sparsifier, query_st_cut
from src.data.stream_file import read_stream, surviving_edge_array, validate_stream
from src.em.block_device import EmParams, IoStats, create_device
from src.em.cost_model import extraction_bound, vsketch_bound
from src.em.primitives import io_snapshot
from src.ingest.ingestion import ingest_stream
from src.ingest.schemes import DoubleCoverScheme, GraphScheme, HypergraphScheme
from src.reports.io_report import build_io_report, format_io_report, write_io_report
from src.utils.config import configure_logging, default_machine, default_seed
from src.utils.errors import (
    BucketOverflowError,
    CorruptSketchError,
    InvalidParamsError,
    PermutationError,
    PreconditionError,
    RamBudgetExceeded,
    SaturationError,
    SketchError,
    StreamFormatError,
    VertexRangeError,
)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_PRECONDITION, EXIT_INTERNAL = 0, 1, 2, 3, 4

EXIT_CODES = [
    (StreamFormatError, EXIT_PARSE),
    (VertexRangeError, EXIT_PARSE),
    (PreconditionError, EXIT_PRECONDITION),
    (BucketOverflowError, EXIT_INTERNAL),
    (SaturationError, EXIT_INTERNAL),
    (CorruptSketchError, EXIT_INTERNAL),
    (PermutationError, EXIT_INTERNAL),
    (RamBudgetExceeded, EXIT_INTERNAL),
    (InvalidParamsError, EXIT_USAGE),
]


class UsageParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class CommandOutput:
    """
    Args:
        summary: (key, value) lines of the result file
        stages: {stage: (IoStats, predicted bound)}
        phi: Sketch words per entity of the primary sketch
        tables: {path: DataFrame} extra result files
        oracle: Zero-argument callable returning agreement with the
            in-memory oracle
    """
    summary: list
    stages: dict
    phi: int
    tables: dict = field(default_factory=dict)
    oracle: object = None


def format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else f"{value:.6f}"
    return str(value)


def write_table(target, frame):
    """Space-separated result file without header or index"""
    if target is None or target == '-':
        frame.to_csv(sys.stdout, sep=' ', header=False, index=False)
        return
    Path(target).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, sep=' ', header=False, index=False)


def summary_frame(summary):
    return pd.DataFrame([(key, format_value(value)) for key, value in summary])


def edge_frame(edges, columns=('u', 'v')):
    return pd.DataFrame(list(edges), columns=list(columns))


def _bounds(dev, N, V, phi, extractions=1):
    M, B = dev.params.ram_words, dev.params.block_words
    return vsketch_bound(N, V, phi, M, B), extractions * extraction_bound(V, phi, M, B)


def _surviving(stream):
    return oracles.surviving_edges(stream.updates)


def _agree_labels(expected, labels):
    return bool((expected == labels).all())


def in_upper_band(estimate, exact, eps):
    """exact <= estimate <= (1 + eps) * exact"""
    return exact <= estimate <= (1 + eps) * exact


def in_band(estimate, exact, eps):
    """(1 - eps) * exact <= estimate <= (1 + eps) * exact"""
    return (1 - eps) * exact <= estimate <= (1 + eps) * exact


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def run_cc(args, stream, dev):
    V = stream.num_vertices
    scheme = GraphScheme(V, 1, seed=args.seed, c0=args.c0)
    sketches = ingest_stream(scheme, dev, stream.updates, args.batch_capacity)
    ingest_io = sketches.stats.io
    try:
        result = boruvka_extract(sketches, dev, merge_strategy=args.merge_strategy)
    finally:
        sketches.free()
    ingest_bound, extract_bound = _bounds(dev, len(stream), V, scheme.entity_words)

    tables = {}
    if args.labels:
        tables[args.labels] = pd.DataFrame(
            {'vertex_id': range(V), 'component_id': result.labels.tolist()}
        )
    if args.forest:
        tables[args.forest] = edge_frame(result.forest)

    def oracle():
        expected = oracles.component_labels(V, list(_surviving(stream)))
        return _agree_labels(expected, result.labels)

    return CommandOutput(
        summary=[
            ('components', result.num_components),
            ('forest_edges', len(result.forest)),
            ('rounds', result.rounds),
            ('round_cap_hit', result.round_cap_hit),
        ],
        stages={'ingest': (ingest_io, ingest_bound), 'extract': (result.io, extract_bound)},
        phi=scheme.entity_words,
        tables=tables,
        oracle=oracle,
    )


def run_bipartite(args, stream, dev):
    V = stream.num_vertices
    tester = BipartiteTester(V, dev, args.seed, args.c0, args.batch_capacity)
    tester.feed_many(stream.updates)
    result = tester.result()
    phi = GraphScheme(V, 1, seed=args.seed, c0=args.c0).entity_words
    cover_phi = DoubleCoverScheme(V, seed=args.seed, c0=args.c0).entity_words
    M, B = dev.params.ram_words, dev.params.block_words
    ingest_bound = vsketch_bound(len(stream), V, phi, M, B) + vsketch_bound(
        len(stream), 2 * V, cover_phi, M, B
    )
    extract_bound = extraction_bound(V, phi, M, B) + extraction_bound(2 * V, cover_phi, M, B)

    def oracle():
        return oracles.is_bipartite(V, list(_surviving(stream))) == result.bipartite

    return CommandOutput(
        summary=[
            ('bipartite', result.bipartite),
            ('components', result.components),
            ('cover_components', result.cover_components),
            ('round_cap_hit', result.round_cap_hit),
        ],
        stages={
            'ingest': (result.ingest_io, ingest_bound),
            'extract': (result.extract_io, extract_bound),
        },
        phi=phi,
        oracle=oracle,
    )


def run_mstweight(args, stream, dev):
    V = stream.num_vertices
    config = MstConfig(epsilon=args.epsilon or 0.25, max_weight=args.max_weight or stream.header.max_weight)
    estimator = MstWeightEstimator(V, config, dev, args.seed, args.c0, args.batch_capacity)
    estimator.feed_many(stream.updates)
    result = estimator.result()
    layers = config.num_thresholds + 1
    phi = estimator.scheme.entity_words
    M, B = dev.params.ram_words, dev.params.block_words
    ingest_bound = vsketch_bound(len(stream), V, phi, M, B)
    extract_bound = layers * extraction_bound(V, phi // layers, M, B)

    def oracle():
        survivors = _surviving(stream)
        exact = oracles.mst_weight(V, [(u, v, w) for (u, v), (_, w) in survivors.items()])
        slack = 1e-9 * max(1.0, exact)
        return exact - slack <= result.estimate <= (1 + config.epsilon) * exact + slack

    return CommandOutput(
        summary=[
            ('mst_weight', float(result.estimate)),
            ('thresholds', layers),
            ('components_per_threshold', ','.join(map(str, result.components))),
            ('round_cap_hit', result.round_cap_hit),
        ],
        stages={
            'ingest': (result.ingest_io, ingest_bound),
            'extract': (result.extract_io, extract_bound),
        },
        phi=phi,
        oracle=oracle,
    )


def run_kconn(args, stream, dev):
    V = stream.num_vertices
    if not args.k:
        raise InvalidParamsError("kconn needs -k")
    start = io_snapshot(dev)
    ksketch = KSketch(V, args.k, dev, seed=args.seed, c0=args.c0, batch_capacity=args.batch_capacity)
    ksketch.feed_many(stream.updates)
    layers, _ = ksketch.finalize()
    ingest_io = io_snapshot(dev) - start
    certificate = extract_certificate(layers, dev, block_size=args.block_size, schedule=args.schedule)
    for layer in layers:
        layer.free()
    cut = min_cut_upto_k(certificate, args.k, dev)
    extract_io = io_snapshot(dev) - start - ingest_io
    phi = ksketch.scheme.entity_words
    M, B = dev.params.ram_words, dev.params.block_words
    ingest_bound = vsketch_bound(len(stream), V, phi, M, B)
    extract_bound = args.k * extraction_bound(V, phi // args.k, M, B)

    tables = {}
    if args.certificate:
        tables[args.certificate] = edge_frame(certificate.edges(), ('u', 'v', 'forest'))

    def oracle():
        exact = oracles.edge_connectivity(V, list(_surviving(stream)))
        return min(exact, args.k) == cut.value

    return CommandOutput(
        summary=[
            ('edge_connectivity', cut.value),
            ('saturated', cut.saturated),
            ('k', args.k),
            ('certificate_edges', len(certificate.edges())),
            ('deletion_blocks', certificate.deletion_io.total),
        ],
        stages={'ingest': (ingest_io, ingest_bound), 'extract': (extract_io, extract_bound)},
        phi=phi,
        tables=tables,
        oracle=oracle,
    )


def _skeleton_stack(args, stream, dev, sparsifier):
    stack = SkeletonStack(
        stream.num_vertices, dev, epsilon=args.epsilon or 0.5, seed=args.seed, c0=args.c0,
        ck=args.ck, sparsifier=sparsifier, k=args.k, block_size=args.block_size,
        batch_capacity=args.batch_capacity,
    )
    start = io_snapshot(dev)
    stack.feed_many(stream.updates)
    stack.finalize()
    return stack, io_snapshot(dev) - start


def _stack_bounds(dev, stack, N):
    M, B = dev.params.ram_words, dev.params.block_words
    phi = stack.levels[0].scheme.entity_words
    layer_phi = phi // stack.k
    ingest = stack.num_levels * vsketch_bound(N, stack.num_vertices, phi, M, B)
    extract = stack.num_levels * stack.k * extraction_bound(stack.num_vertices, layer_phi, M, B)
    return phi, ingest, extract


def run_mincut(args, stream, dev):
    V = stream.num_vertices
    stack, ingest_io = _skeleton_stack(args, stream, dev, sparsifier=False)
    before = io_snapshot(dev)
    try:
        estimate = approx_min_cut(stack)
    finally:
        stack.free()
    tables = {}
    summary = [
        ('min_cut', estimate.estimate),
        ('level', estimate.level),
        ('certificate_cut', estimate.certificate_cut),
        ('k', stack.k),
        ('linear_fallback', estimate.linear_fallback),
    ]
    if args.recover_edges:
        survivors = surviving_edge_array(dev, stream.updates)
        crossing = recover_cut_edges(dev, survivors, estimate.side)
        survivors.free()
        tables[args.recover_edges] = edge_frame(crossing)
        summary.append(('cut_edges', len(crossing)))
    extract_io = io_snapshot(dev) - before
    phi, ingest_bound, extract_bound = _stack_bounds(dev, stack, len(stream))
    eps = stack.epsilon

    def oracle():
        exact = oracles.edge_connectivity(V, list(_surviving(stream)))
        return in_upper_band(estimate.estimate, exact, eps)

    return CommandOutput(
        summary=summary,
        stages={'ingest': (ingest_io, ingest_bound), 'extract': (extract_io, extract_bound)},
        phi=phi,
        tables=tables,
        oracle=oracle,
    )


def run_sparsify(args, stream, dev):
    V = stream.num_vertices
    stack, ingest_io = _skeleton_stack(args, stream, dev, sparsifier=True)
    before = io_snapshot(dev)
    try:
        sparsifier = build_sparsifier(stack)
    finally:
        stack.free()
    extract_io = io_snapshot(dev) - before
    phi, ingest_bound, extract_bound = _stack_bounds(dev, stack, len(stream))
    eps = stack.epsilon

    queries = [(int(s), int(t), query_st_cut(sparsifier, int(s), int(t))) for s, t in args.st or []]
    summary = [
        ('sparsifier_edges', len(sparsifier.edges)),
        ('k', sparsifier.k),
        ('level_fallbacks', sparsifier.fallbacks),
    ]
    summary.extend((f"st_cut_{s}_{t}", value) for s, t, value in queries)
    tables = {}
    if args.sparsifier:
        tables[args.sparsifier] = edge_frame(sparsifier.rows(), ('u', 'v', 'weight'))

    def oracle():
        edges = list(_surviving(stream))
        if queries:
            return all(in_band(value, oracles.st_cut(V, edges, s, t), eps) for s, t, value in queries)
        G = sparsifier.graph()
        approx = nx.stoer_wagner(G)[0] if V > 1 and nx.is_connected(G) else 0
        return in_band(approx, oracles.edge_connectivity(V, edges), eps)

    return CommandOutput(
        summary=summary,
        stages={'ingest': (ingest_io, ingest_bound), 'extract': (extract_io, extract_bound)},
        phi=phi,
        tables=tables,
        oracle=oracle,
    )


def run_hypercc(args, stream, dev):
    V = stream.num_vertices
    arity = args.arity or stream.header.arity
    if arity < stream.header.arity:
        raise InvalidParamsError(f"-r {arity} is below the stream's arity {stream.header.arity}")
    scheme = HypergraphScheme(V, arity, seed=args.seed, c0=args.c0)
    sketches = ingest_stream(scheme, dev, stream.updates, args.batch_capacity)
    ingest_io = sketches.stats.io
    try:
        result = boruvka_extract(sketches, dev, merge_strategy=args.merge_strategy)
    finally:
        sketches.free()
    ingest_bound, extract_bound = _bounds(dev, len(stream), V, scheme.entity_words)

    tables = {}
    if args.labels:
        tables[args.labels] = pd.DataFrame(
            {'vertex_id': range(V), 'component_id': result.labels.tolist()}
        )
    if args.forest:
        tables[args.forest] = pd.DataFrame(
            [(i, v) for i, members in enumerate(result.forest) for v in members],
            columns=['hyperedge', 'vertex_id'],
        )

    def oracle():
        expected = oracles.component_labels(V, list(_surviving(stream)))
        return _agree_labels(expected, result.labels)

    return CommandOutput(
        summary=[
            ('components', result.num_components),
            ('forest_hyperedges', len(result.forest)),
            ('rounds', result.rounds),
            ('round_cap_hit', result.round_cap_hit),
        ],
        stages={'ingest': (ingest_io, ingest_bound), 'extract': (result.io, extract_bound)},
        phi=scheme.entity_words,
        tables=tables,
        oracle=oracle,
    )


def run_densest(args, stream, dev):
    V = stream.num_vertices
    config = DensestConfig(
        epsilon=args.epsilon or 0.5,
        enforce_precondition=not args.no_precondition,
        abort_on_overflow=not args.allow_overflow,
        sampling_rate=args.sampling_rate,
    )
    sketch = DensestSubgraphSketch(V, dev, config, args.seed, args.batch_capacity)
    sketch.feed_many(stream.updates)
    result = sketch.query()
    scheme = sketch.scheme
    M, B = dev.params.ram_words, dev.params.block_words
    ingest_bound = vsketch_bound(len(stream), scheme.num_buckets, scheme.entity_words, M, B)
    extract_bound = extraction_bound(scheme.num_buckets, scheme.entity_words, M, B)

    tables = {}
    if args.vertices:
        tables[args.vertices] = pd.DataFrame({'vertex_id': sorted(result.vertices)})
    eps = config.epsilon

    def oracle():
        exact, _ = oracles.densest_subgraph(V, list(_surviving(stream)))
        return exact / (2 * (1 + eps)) <= result.density <= (1 + eps) * exact

    return CommandOutput(
        summary=[
            ('density', float(result.density)),
            ('subgraph_vertices', len(result.vertices)),
            ('sampling_rate', float(result.sampling_rate)),
            ('sampled_edges', result.sampled_edges),
            ('total_edges', result.total_edges),
            ('overflow', result.overflow),
            ('shortfall', result.shortfall),
        ],
        stages={
            'ingest': (result.ingest_io, ingest_bound),
            'extract': (result.query_io, extract_bound),
        },
        phi=scheme.entity_words,
        tables=tables,
        oracle=oracle,
    )


COMMANDS = {
    'cc': (run_cc, "Connected components and a spanning forest"),
    'bipartite': (run_bipartite, "Bipartiteness via the double cover"),
    'mstweight': (run_mstweight, "(1 + eps)-approximate minimum spanning forest weight"),
    'kconn': (run_kconn, "k edge-disjoint forests and edge connectivity up to k"),
    'mincut': (run_mincut, "(1 + eps)-approximate global minimum cut"),
    'sparsify': (run_sparsify, "Weighted cut sparsifier and s-t cut queries"),
    'hypercc': (run_hypercc, "Hypergraph connected components"),
    'densest': (run_densest, "Approximate densest subgraph"),
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common(parser):
    parser.add_argument("stream", help="Stream file (H <V> [W] [r] header, I/D update lines)")
    parser.add_argument("--out", "-o", default=None, help="Result summary file (default stdout)")
    parser.add_argument("-M", "--ram-words", type=int, default=None,
                        help="RAM size M in words (default SKETCH_RAM_WORDS)")
    parser.add_argument("-B", "--block-words", type=int, default=None,
                        help="Block size B in words (default SKETCH_BLOCK_WORDS)")
    parser.add_argument("--seed", type=int, default=None, help="Master seed (default SKETCH_SEED)")
    parser.add_argument("--c0", type=float, default=2.0, help="Sketch copies constant")
    parser.add_argument("--batch-capacity", type=int, default=None,
                        help="Tagged copies staged before a flush (default V * phi)")
    parser.add_argument("--device-file", default=None,
                        help="Back the simulated disk with this file instead of memory")
    parser.add_argument("--validate", action="store_true",
                        help="Check stream legality at sorting cost before running")
    parser.add_argument("--io-report", default=None, help="Write a JSON I/O report to this path")
    parser.add_argument("--oracle-check", action="store_true",
                        help="Compare against the exact in-memory answer (small inputs)")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")


def build_parser():
    parser = UsageParser(
        description="Graph sketching in the external semi-streaming model",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p)
        if name in ('cc', 'hypercc'):
            p.add_argument("--labels", help="Write 'vertex_id component_id' lines here")
            p.add_argument("--forest", help="Write the spanning (hyper)forest here")
            p.add_argument("--merge-strategy", choices=['auto', 'memory', 'hooking'], default='auto',
                           help="Connected components of each round's merge graph")
        if name == 'hypercc':
            p.add_argument("-r", "--arity", type=int, default=None,
                           help="Largest hyperedge size (default from the header)")
        if name in ('mstweight', 'mincut', 'sparsify', 'densest'):
            p.add_argument("--epsilon", "-e", type=float, default=None, help="Accuracy")
        if name == 'mstweight':
            p.add_argument("--max-weight", "-W", type=float, default=None,
                           help="Largest edge weight (default from the header)")
        if name in ('kconn', 'mincut', 'sparsify'):
            p.add_argument("-k", type=int, default=None,
                           help="Forests per sketch (required for kconn; overrides the default otherwise)")
            p.add_argument("--block-size", type=int, default=None,
                           help="Forests per deletion-schedule block (default ceil(log2 V)^2)")
        if name == 'kconn':
            p.add_argument("--schedule", choices=['log', 'naive'], default='log',
                           help="Forest deletion schedule")
            p.add_argument("--certificate", help="Write 'u v forest' certificate edges here")
        if name in ('mincut', 'sparsify'):
            p.add_argument("--ck", type=float, default=DEFAULT_CK, help="Constant in k = ck * eps^-2 * log2 V")
        if name == 'mincut':
            p.add_argument("--recover-edges", help="Write the edges crossing the found cut here")
        if name == 'sparsify':
            p.add_argument("--st", nargs=2, type=int, action="append", metavar=("S", "T"),
                           help="Answer an s-t minimum cut query (repeatable)")
            p.add_argument("--sparsifier", help="Write 'u v weight' sparsifier edges here")
        if name == 'densest':
            p.add_argument("--vertices", help="Write the densest subgraph's vertex ids here")
            p.add_argument("--sampling-rate", type=float, default=None, help="Override the sampling rate p")
            p.add_argument("--no-precondition", action="store_true",
                           help="Warn instead of failing when eps^2 E / V is too small")
            p.add_argument("--allow-overflow", action="store_true",
                           help="Flag instead of aborting when a bucket exceeds 4 eps^2 E / V edges")
    return parser


def exit_code_for(error):
    for cls, code in EXIT_CODES:
        if isinstance(error, cls):
            return code
    return EXIT_INTERNAL


def run(args):
    """
    Execute one command end to end

    Returns:
        CommandOutput after every result file is written
    """
    stream = read_stream(args.stream)
    default_m, default_b = default_machine()
    params = EmParams(args.ram_words or default_m, args.block_words or default_b)
    dev = create_device(params, args.device_file)
    try:
        validate_io = IoStats()
        if args.validate:
            before = io_snapshot(dev)
            validate_stream(stream, dev)
            validate_io = io_snapshot(dev) - before

        handler, _ = COMMANDS[args.command]
        output = handler(args, stream, dev)

        summary = list(output.summary)
        if args.oracle_check:
            summary.append(('oracle_agreement', bool(output.oracle())))
        write_table(args.out, summary_frame(summary))
        for path, frame in output.tables.items():
            write_table(path, frame)

        if args.io_report:
            stages = dict(output.stages)
            if args.validate:
                stages = {'validate': (validate_io, 0.0), **stages}
            report = build_io_report(
                args.command, params, len(stream), stream.num_vertices, output.phi, stages
            )
            write_io_report(args.io_report, report)
            print(format_io_report(report), file=sys.stderr)
        return output
    finally:
        dev.close()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
    except ValueError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is None:
        args.seed = default_seed()

    try:
        run(args)
    except SketchError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return exit_code_for(e)
    except (OSError, ValueError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
