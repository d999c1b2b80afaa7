"""
Environment configuration

Reads defaults for the simulated external-memory machine and the master
seed from the environment (optionally a .env file in the project root).
"""
import os
import logging
from dotenv import load_dotenv

load_dotenv()

DEFAULTS = {
    'SKETCH_SEED': 1,
    'SKETCH_RAM_WORDS': 65536,
    'SKETCH_BLOCK_WORDS': 256,
}

LOG_FORMAT = '[%(asctime)s] %(levelname)s %(name)s: %(message)s'


def _read_int(name):
    """Read an integer setting, falling back to DEFAULTS"""
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return DEFAULTS[name]
    try:
        return int(raw)
    except ValueError:
        raise ValueError(
            f"{name}={raw!r} is not an integer.\n"
            "Please fix your .env file (or environment), for example:\n"
            f"  {name}={DEFAULTS[name]}\n"
            "See .env.example for every supported variable."
        )


def default_seed():
    """Master seed used when the command line does not give one"""
    return _read_int('SKETCH_SEED')


def default_machine():
    """
    Default (ram_words, block_words) pair

    Returns:
        Tuple (M, B) in 64-bit words
    """
    ram_words = _read_int('SKETCH_RAM_WORDS')
    block_words = _read_int('SKETCH_BLOCK_WORDS')
    if ram_words <= 0 or block_words <= 0:
        raise ValueError(
            "SKETCH_RAM_WORDS and SKETCH_BLOCK_WORDS must be positive.\n"
            f"Got SKETCH_RAM_WORDS={ram_words}, SKETCH_BLOCK_WORDS={block_words}.\n"
            "Example valid settings:\n"
            "  SKETCH_RAM_WORDS=65536\n"
            "  SKETCH_BLOCK_WORDS=256"
        )
    return ram_words, block_words


def configure_logging(level=None, log_file=None):
    """
    Set up root logging for scripts

    Args:
        level: Level name; defaults to SKETCH_LOG_LEVEL or WARNING
        log_file: Optional path; defaults to SKETCH_LOG_FILE
    """
    level = level or os.getenv('SKETCH_LOG_LEVEL', 'WARNING')
    log_file = log_file or os.getenv('SKETCH_LOG_FILE')

    numeric = logging.getLevelName(str(level).upper())
    if not isinstance(numeric, int):
        raise ValueError(
            f"Unknown log level {level!r}.\n"
            "Use one of DEBUG, INFO, WARNING, ERROR."
        )

    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(level=numeric, format=LOG_FORMAT, handlers=handlers, force=True)
