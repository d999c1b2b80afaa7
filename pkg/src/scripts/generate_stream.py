"""
Generate Synthetic Stream Files

Writes a path, cycle, clique, random tree, random dynamic, weighted,
hypergraph or planted-dense stream in the stream file format.

Usage:
    python src/scripts/generate_stream.py random --vertices 64 --updates 5000 --out data/r64.txt
    python src/scripts/generate_stream.py hyper --vertices 40 --arity 3 --updates 400 --out h.txt
    python src/scripts/generate_stream.py dense --vertices 60 --updates 120 --clique-size 12 --out d.txt
"""
import sys
import argparse
from pathlib import Path

project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

from src.data.stream_file import StreamHeader, write_stream
from src.data.stream_generators import GENERATORS
from src.utils.config import configure_logging, default_seed
from src.utils.errors import SketchError


def build_parser():
    parser = argparse.ArgumentParser(description="Generate a synthetic dynamic graph stream file")
    parser.add_argument("kind", choices=sorted(GENERATORS), help="Stream family")
    parser.add_argument("--vertices", "-V", type=int, required=True, help="Number of vertices V")
    parser.add_argument("--updates", "-N", type=int, default=1000,
                        help="Stream length (random kinds) or background edges (dense)")
    parser.add_argument("--delete-fraction", type=float, default=0.3,
                        help="Chance that a random step deletes a live edge")
    parser.add_argument("--max-weight", "-W", type=float, default=16.0,
                        help="Largest edge weight (weighted streams)")
    parser.add_argument("--arity", "-r", type=int, default=3, help="Hyperedge size (hyper streams)")
    parser.add_argument("--clique-size", type=int, default=10, help="Planted clique size (dense streams)")
    parser.add_argument("--seed", type=int, default=None, help="Generator seed (default SKETCH_SEED)")
    parser.add_argument("--out", "-o", required=True, help="Output stream file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging()
    if args.seed is None:
        args.seed = default_seed()

    try:
        updates = GENERATORS[args.kind](args)
    except SketchError as e:
        print(f"ERROR: {e}")
        return 1

    header = StreamHeader(
        args.vertices,
        max_weight=args.max_weight if args.kind == 'weighted' else 1.0,
        arity=args.arity if args.kind == 'hyper' else 2,
    )
    comment = f"{args.kind} stream, seed {args.seed}"
    write_stream(args.out, header, updates, comment=comment)

    inserts = sum(1 for u in updates if u.is_insert)
    print(f"Wrote {len(updates)} updates ({inserts} inserts, {len(updates) - inserts} deletes) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
