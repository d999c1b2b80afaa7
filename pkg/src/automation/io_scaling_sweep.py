"""
I/O Scaling Sweep

Runs connectivity ingestion and extraction across a grid of stream
lengths N and machine shapes (M, B):
1. Generate one random dynamic stream per (V, N)
2. Ingest it on a fresh device for every (M, B)
3. Record measured block I/O next to the cost-model prediction
4. Write a CSV summary

Usage:
    python src/automation/io_scaling_sweep.py
    python src/automation/io_scaling_sweep.py --vertices 64 --updates 2000 4000 8000 --out sweep.csv
"""
import sys
import argparse
import itertools
from pathlib import Path
from datetime import datetime

project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import pandas as pd

from src.analytics.connectivity import boruvka_extract
from src.data.stream_generators import random_dynamic_stream
from src.em.block_device import EmParams, create_device
from src.em.cost_model import extraction_bound, vsketch_bound
from src.ingest.ingestion import ingest_stream
from src.ingest.schemes import GraphScheme
from src.utils.config import configure_logging, default_seed
from src.utils.errors import SketchError


class IoScalingSweep:
    """
    Measured vs predicted I/O over an (N, M, B) grid
    """

    def __init__(self, num_vertices, updates, machines, seed=1, delete_fraction=0.3,
                 log_file='io_scaling_sweep.log'):
        self.num_vertices = num_vertices
        self.updates = list(updates)
        self.machines = list(machines)
        self.seed = seed
        self.delete_fraction = delete_fraction
        self.log_file = log_file
        self.rows = []
        self.errors = []

    def log(self, message):
        """Log message to both console and file"""
        timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
        log_msg = f"[{timestamp}] {message}"
        print(log_msg)

        if self.log_file:
            with open(self.log_file, 'a') as f:
                f.write(log_msg + '\n')

    def measure(self, stream, ram_words, block_words):
        """
        One grid point

        Returns:
            Dict row for the summary
        """
        V = self.num_vertices
        params = EmParams(ram_words, block_words)
        dev = create_device(params)
        scheme = GraphScheme(V, 1, seed=self.seed)
        try:
            sketches = ingest_stream(scheme, dev, stream)
            result = boruvka_extract(sketches, dev)
            sketches.free()
        finally:
            dev.close()
        phi = scheme.entity_words
        ingest_bound = vsketch_bound(len(stream), V, phi, ram_words, block_words)
        extract_bound = extraction_bound(V, phi, ram_words, block_words)
        ingest_io = sketches.stats.io
        return {
            'N': len(stream),
            'V': V,
            'phi': phi,
            'M': ram_words,
            'B': block_words,
            'ingest_read': ingest_io.blocks_read,
            'ingest_written': ingest_io.blocks_written,
            'ingest_predicted': round(ingest_bound, 3),
            'ingest_ratio': round(ingest_io.total / ingest_bound, 4) if ingest_bound else 0.0,
            'extract_read': result.io.blocks_read,
            'extract_written': result.io.blocks_written,
            'extract_predicted': round(extract_bound, 3),
            'extract_ratio': round(result.io.total / extract_bound, 4) if extract_bound else 0.0,
            'batches': sketches.stats.batches,
            'components': result.num_components,
            'rounds': result.rounds,
        }

    def run(self):
        """
        Run the whole grid

        Returns:
            DataFrame with one row per (N, M, B)
        """
        self.log("=" * 70)
        self.log("I/O SCALING SWEEP - Starting")
        self.log("=" * 70)
        self.log(f"V = {self.num_vertices}, N in {self.updates}, (M, B) in {self.machines}")

        grid = list(itertools.product(self.updates, self.machines))
        streams = {}
        for i, (n, (ram_words, block_words)) in enumerate(grid, 1):
            self.log(f"\n[{i}/{len(grid)}] N={n}, M={ram_words}, B={block_words}")
            if n not in streams:
                streams[n] = random_dynamic_stream(
                    self.num_vertices, n, self.delete_fraction, self.seed
                )
            try:
                row = self.measure(streams[n], ram_words, block_words)
            except SketchError as e:
                self.log(f"   Skipped: {e}")
                self.errors.append({'N': n, 'M': ram_words, 'B': block_words, 'error': str(e)})
                continue
            self.rows.append(row)
            self.log(
                f"   ingest {row['ingest_read'] + row['ingest_written']} blocks "
                f"(ratio {row['ingest_ratio']:.3f}), extract "
                f"{row['extract_read'] + row['extract_written']} blocks (ratio {row['extract_ratio']:.3f})"
            )

        self.log("\n" + "=" * 70)
        self.log("I/O SCALING SWEEP - Summary")
        self.log("=" * 70)
        self.log(f"Grid points measured: {len(self.rows)}/{len(grid)}")
        self.log(f"Errors: {len(self.errors)}")
        return pd.DataFrame(self.rows)

    def save_results(self, frame, output_file):
        Path(output_file).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(output_file, index=False)
        self.log(f"\nResults saved to {output_file}")


def parse_machine(text):
    try:
        ram_words, block_words = (int(x) for x in text.split(':'))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected M:B, got {text!r}")
    return ram_words, block_words


def main(argv=None):
    parser = argparse.ArgumentParser(description="Measure ingestion and extraction I/O over a grid")
    parser.add_argument("--vertices", "-V", type=int, default=32, help="Number of vertices")
    parser.add_argument("--updates", "-N", type=int, nargs='+', default=[2000, 4000, 8000],
                        help="Stream lengths")
    parser.add_argument("--machine", type=parse_machine, nargs='+',
                        default=[(4096, 64), (16384, 64), (16384, 256)],
                        help="Machine shapes as M:B")
    parser.add_argument("--delete-fraction", type=float, default=0.3)
    parser.add_argument("--seed", type=int, default=None, help="Stream and sketch seed")
    parser.add_argument("--out", "-o", default="io_scaling_sweep.csv", help="CSV summary path")
    parser.add_argument("--log-file", default="io_scaling_sweep.log", help="Progress log file")
    args = parser.parse_args(argv)

    configure_logging()
    sweep = IoScalingSweep(
        args.vertices, args.updates, args.machine,
        seed=args.seed if args.seed is not None else default_seed(),
        delete_fraction=args.delete_fraction,
        log_file=args.log_file,
    )
    frame = sweep.run()
    sweep.save_results(frame, args.out)
    return 0 if not sweep.errors else 1


if __name__ == "__main__":
    sys.exit(main())
