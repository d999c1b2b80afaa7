"""
Sketch serialization

Layout (little-endian int64 words):

    word 0   MAGIC
    word 1   FORMAT_VERSION
    word 2   V
    word 3   L (levels)
    word 4   C (copies)
    word 5   master seed
    word 6   p (fingerprint prime)
    word 7   arity (2 for graphs)
    word 8   c0 as IEEE-754 float64 bits
    word 9   layers per entity
    word 10  number of entities (vertices or buckets)
    word 11  words per entity
    word 12  seed-tag length t (at most 3)
    word 13+ seed-tag values, zero padded to 3 words
    body     entity 0, entity 1, ... each = layers x (C x L x 3) words,
             buckets as (gamma, sigma, tau)
"""
from dataclasses import replace
from pathlib import Path

import numpy as np

from src.sketch.l0_sampler import SketchParams, VertexSketch
from src.utils.errors import CorruptSketchError

MAGIC = 0x47534B4554434831  # "GSKETCH1"
FORMAT_VERSION = 1
HEADER_WORDS = 16
MAX_TAG_WORDS = 3
FILE_DTYPE = np.dtype('<i8')


def sketch_header(params, num_layers=1, num_entities=1, entity_words=None, tag=None):
    """
    Header words; `tag` is the seed tag stored for the reader (defaults to
    params.layer)
    """
    tag = tuple(params.layer if tag is None else tag)
    if len(tag) > MAX_TAG_WORDS:
        raise CorruptSketchError(f"seed tag {tag} longer than {MAX_TAG_WORDS} words")
    c0_bits = int(np.array([params.c0], dtype="<f8").view("<i8")[0])
    return np.array(
        [
            MAGIC,
            FORMAT_VERSION,
            params.num_vertices,
            params.levels,
            params.copies,
            params.seed,
            params.prime,
            params.arity,
            c0_bits,
            num_layers,
            num_entities,
            entity_words if entity_words is not None else num_layers * params.words,
            len(tag),
            *tag,
            *([0] * (MAX_TAG_WORDS - len(tag))),
        ],
        dtype=FILE_DTYPE,
    )


def parse_header(words, expected=None):
    """
    Decode and sanity-check a header

    Args:
        words: At least HEADER_WORDS int64 words
        expected: Optional SketchParams the header must match

    Returns:
        dict with params (SketchParams), num_layers, num_entities,
        entity_words, tag
    """
    words = np.asarray(words, dtype=np.int64)
    if len(words) < HEADER_WORDS:
        raise CorruptSketchError(f"sketch header truncated ({len(words)} words)")
    if int(words[0]) != MAGIC:
        raise CorruptSketchError("bad magic word: not a sketch file")
    if int(words[1]) != FORMAT_VERSION:
        raise CorruptSketchError(f"unsupported sketch format version {int(words[1])}")
    c0 = float(np.array([words[8]], dtype='<i8').view('<f8')[0])
    try:
        params = SketchParams(
            int(words[2]), seed=int(words[5]), c0=c0, arity=int(words[7])
        )
    except ValueError as exc:
        raise CorruptSketchError(f"sketch header holds invalid params: {exc}")
    if params.copies != int(words[4]) and int(words[4]) > 0:
        params = replace(params, fixed_copies=int(words[4]))
    if (
        params.levels != int(words[3])
        or params.copies != int(words[4])
        or params.prime != int(words[6])
    ):
        raise CorruptSketchError(
            f"sketch header inconsistent: L={int(words[3])}, C={int(words[4])} "
            f"but V={params.num_vertices} implies L={params.levels}, C={params.copies}"
        )
    num_layers, num_entities, entity_words = (int(w) for w in words[9:12])
    tag_len = int(words[12])
    if not 0 <= tag_len <= MAX_TAG_WORDS:
        raise CorruptSketchError(f"bad seed-tag length {tag_len}")
    tag = tuple(int(w) for w in words[13:13 + tag_len])
    if num_layers < 1 or num_entities < 0 or entity_words != num_layers * params.words:
        raise CorruptSketchError(
            f"sketch header sizes inconsistent (layers={num_layers}, entity_words={entity_words})"
        )
    if expected is not None and not expected.compatible(params.with_layer(*expected.layer)):
        raise CorruptSketchError("sketch header does not match the expected params")
    return {
        'params': params,
        'num_layers': num_layers,
        'num_entities': num_entities,
        'entity_words': entity_words,
        'tag': tag,
    }


def serialize_sketch(sketch):
    """Header + body words for a single VertexSketch"""
    return np.concatenate([sketch_header(sketch.params), sketch.words.astype(FILE_DTYPE)])


def deserialize_sketch(words):
    info = parse_header(words)
    body = np.asarray(words[HEADER_WORDS:], dtype=np.int64)
    params = info['params'].with_layer(*info['tag'])
    if len(body) != params.words:
        raise CorruptSketchError(f"sketch body has {len(body)} words, expected {params.words}")
    return VertexSketch.from_words(params, body)


def write_sketch_file(path, header, body_chunks):
    """Write header then each body chunk, in order"""
    with open(Path(path), 'wb') as fh:
        fh.write(np.asarray(header, dtype=FILE_DTYPE).tobytes())
        for chunk in body_chunks:
            fh.write(np.asarray(chunk, dtype=FILE_DTYPE).tobytes())


def read_sketch_file(path):
    """
    Returns:
        (header info dict, body int64 array)
    """
    words = np.fromfile(Path(path), dtype=FILE_DTYPE)
    info = parse_header(words)
    body = words[HEADER_WORDS:].astype(np.int64)
    expected = info['num_entities'] * info['entity_words']
    if len(body) != expected:
        raise CorruptSketchError(f"sketch body has {len(body)} words, header promises {expected}")
    return info, body
