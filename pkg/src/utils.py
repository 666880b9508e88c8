import logging
import os
import sys

import numpy as np

LOG_LEVEL_ENV = "MILBUS_LOG_LEVEL"

LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

# stream ids for seeded generators, one per source of randomness
JITTER_STREAM = 0
APERIODIC_STREAM = 1
ATTACK_STREAM = 2

def configure_logging(level=None):
    """ route diagnostics to stderr at the level named by MILBUS_LOG_LEVEL """

    name = (level or os.environ.get(LOG_LEVEL_ENV, "warn")).lower()
    unknown = name not in LOG_LEVELS

    root = logging.getLogger("src")
    root.handlers.clear()

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(LOG_LEVELS.get(name, logging.WARNING))
    root.propagate = False

    if unknown:
        root.warning("unknown %s=%r, falling back to 'warn'", LOG_LEVEL_ENV, name)

    return root

def make_rng(seed, stream):
    """ independent deterministic generator for a (seed, stream) pair """

    return np.random.default_rng([int(seed), int(stream)])

def parse_window(text):
    """ 'start:end' in milliseconds -> (start_us, end_us) """

    try:
        start, end = text.split(":")
        return int(float(start) * 1000), int(float(end) * 1000)

    except ValueError:
        raise ValueError(f"attack window must look like 'start_ms:end_ms', got {text!r}")
