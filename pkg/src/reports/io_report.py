"""
I/O Report

Machine-readable summary of one command's block transfers next to the
cost-model prediction, plus a printable text rendering.
"""
import json
import logging
from pathlib import Path

from src.em.block_device import IoStats

logger = logging.getLogger(__name__)


def stage_entry(io, predicted_bound):
    entry = io.as_dict()
    entry['predicted_bound'] = round(float(predicted_bound), 3)
    return entry


def build_io_report(command, params, num_updates, num_vertices, phi, stages):
    """
    Combine per-stage counters into one report

    Args:
        command: Command name
        params: EmParams of the run
        num_updates: N
        num_vertices: V
        phi: Sketch words per vertex (of the primary sketch)
        stages: Ordered {stage name: (IoStats, predicted bound)}

    Returns:
        Dict with blocks_read, blocks_written, N, V, phi, M, B,
        predicted_bound and one entry per stage
    """
    total = IoStats()
    predicted = 0.0
    for io, bound in stages.values():
        total = total + io
        predicted += bound
    report = {
        'command': command,
        'blocks_read': total.blocks_read,
        'blocks_written': total.blocks_written,
        'N': num_updates,
        'V': num_vertices,
        'phi': phi,
        'M': params.ram_words,
        'B': params.block_words,
        'predicted_bound': round(predicted, 3),
        'stages': {name: stage_entry(io, bound) for name, (io, bound) in stages.items()},
    }
    ratio = total.total / predicted if predicted else 0.0
    report['measured_over_predicted'] = round(ratio, 4)
    logger.info(
        "%s: %d block I/Os measured, %.1f predicted (ratio %.3f)",
        command, total.total, predicted, ratio,
    )
    return report


def write_io_report(path, report):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write('\n')


def format_io_report(report):
    """Printable text version"""
    lines = []
    lines.append("=" * 70)
    lines.append(f"I/O REPORT - {report['command'].upper()}")
    lines.append("=" * 70)
    lines.append(f"Machine: M = {report['M']} words, B = {report['B']} words")
    lines.append(f"Stream: N = {report['N']} updates, V = {report['V']}, phi = {report['phi']}")

    lines.append("\nPer stage")
    lines.append("-" * 70)
    for name, entry in report['stages'].items():
        lines.append(
            f"   {name:<12} read {entry['blocks_read']:>10}   written {entry['blocks_written']:>10}"
            f"   predicted {entry['predicted_bound']:>12.1f}"
        )

    lines.append("\nTotal")
    lines.append("-" * 70)
    lines.append(f"Blocks read:      {report['blocks_read']}")
    lines.append(f"Blocks written:   {report['blocks_written']}")
    lines.append(f"Predicted bound:  {report['predicted_bound']:.1f}")
    lines.append(f"Measured/predicted: {report['measured_over_predicted']:.3f}")
    lines.append("=" * 70)
    return "\n".join(lines)
