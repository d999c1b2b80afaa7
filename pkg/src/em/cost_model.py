"""
I/O cost formulas for the external-memory machine

All sizes are in words. These are the predicted bounds reported next to
measured block counts (see src/reports/io_report.py).

Documented constants:
    SORT_IO_CONSTANT: ext_sort never exceeds
        SORT_IO_CONSTANT * ceil(N/B) * (1 + ceil(log_{M/B}(N/B))) block I/Os
    PERMUTE_IO_CONSTANT: ext_permute never exceeds
        PERMUTE_IO_CONSTANT * min(records, sort(N)) when records fit in a block
    INGEST_IO_CONSTANT / EXTRACT_IO_CONSTANT: multipliers used in the
        vsketch and extraction bounds of the I/O report
"""
import math

SORT_IO_CONSTANT = 8
PERMUTE_IO_CONSTANT = 4
INGEST_IO_CONSTANT = 8
EXTRACT_IO_CONSTANT = 32


def blocks(words, block_words):
    return -(-int(words) // block_words)


def scan_ios(words, block_words):
    """scan(N) = ceil(N/B)"""
    return blocks(words, block_words)


def merge_passes(words, ram_words, block_words):
    """Number of merge passes after run formation"""
    n_blocks = blocks(words, block_words)
    if n_blocks * block_words <= ram_words or n_blocks <= 1:
        return 0
    fan_in = max(2, ram_words // (2 * block_words))
    runs = blocks(n_blocks, max(1, (ram_words - 2 * block_words) // block_words))
    return max(1, math.ceil(math.log(runs, fan_in))) if runs > 1 else 0


def sort_ios(words, ram_words, block_words):
    """Estimated block I/Os of one ext_sort (read + write per pass)"""
    n_blocks = blocks(words, block_words)
    return 2 * n_blocks * (1 + merge_passes(words, ram_words, block_words))


def log_mb(words, ram_words, block_words):
    """ceil(log_{M/B}(N/B)), at least 1"""
    n_blocks = blocks(words, block_words)
    base = ram_words / block_words
    if n_blocks <= 1:
        return 1
    return max(1, math.ceil(math.log(n_blocks) / math.log(base)))


def sort_bound(words, ram_words, block_words):
    """The documented ext_sort ceiling"""
    n_blocks = blocks(words, block_words)
    return SORT_IO_CONSTANT * max(1, n_blocks) * (1 + log_mb(words, ram_words, block_words))


def permute_ios(records, record_words, ram_words, block_words):
    """permute(N) = min(N, sort(N))"""
    return min(records, sort_ios(records * record_words, ram_words, block_words))


def vsketch_bound(updates, num_entities, phi, ram_words, block_words, record_words=4):
    """
    Predicted ingestion cost of a vertex-based sketch

    vsketch(N, V, phi) = permute-style routing of the N staged copies across
    log_{M/B}(V*phi/B) levels, one scan of the sketch array per batch
    (amortized into N/B once N >= V*phi), the scan(N*phi/M) term for
    sketches larger than RAM, and the zero-initialization floor scan(V*phi).
    """
    staged_words = 2 * updates * record_words
    sketch_words = num_entities * phi
    routing = (staged_words / block_words) * log_mb(sketch_words, ram_words, block_words)
    batches = max(1, math.ceil(2 * updates / max(1, sketch_words)))
    per_batch_scan = scan_ios(sketch_words, block_words) if updates else 0
    large = scan_ios(updates * phi / ram_words, block_words) if phi > ram_words // 4 else 0
    floor = scan_ios(sketch_words, block_words)
    return INGEST_IO_CONSTANT * (routing + 2 * batches * per_batch_scan + large + floor)


def extraction_bound(num_entities, phi, ram_words, block_words):
    """
    c * sort(V * phi); live components at least halve per successful round,
    so the per-round costs sum geometrically
    """
    words = num_entities * phi
    return EXTRACT_IO_CONSTANT * max(1, blocks(words, block_words)) * (
        1 + log_mb(words, ram_words, block_words)
    )
