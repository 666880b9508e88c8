import logging

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from src.codec import MessageId, message_id_of

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE_US = 40
DEFAULT_RARE_COUNT = 5
DEFAULT_MAX_CYCLES = 3

class MessageClass(str, Enum):
    PERIODIC = "Periodic"
    APERIODIC = "Aperiodic"

# ----------------------------------------------------------------------- CLUSTERING

def _check_tolerance(tolerance_us):

    if tolerance_us <= 0:
        raise ValueError(f"tolerance_us must be positive, got {tolerance_us}")

def cluster_time_differences(deltas, tolerance_us=DEFAULT_TOLERANCE_US):
    """
    Greedy one-dimensional clustering of time differences.

    Sorted deltas are cut wherever two neighbours are more than
    `tolerance_us` apart.

    :param deltas: time differences (us), any order
    :return: list of 1d int arrays, ascending, one per cluster
    """

    _check_tolerance(tolerance_us)

    d = np.sort(np.asarray(deltas, dtype=np.int64))
    if d.size == 0:
        return []

    cuts = np.flatnonzero(np.diff(d) > tolerance_us) + 1

    return np.split(d, cuts)

def cluster_time_differences_slow(deltas, tolerance_us=DEFAULT_TOLERANCE_US):
    """ loop version of `cluster_time_differences` """

    _check_tolerance(tolerance_us)

    clusters = []
    for delta in sorted(int(d) for d in deltas):

        if clusters and delta - clusters[-1][-1] <= tolerance_us:
            clusters[-1].append(delta)
        else:
            clusters.append([delta])

    return clusters

def extract_time_cycles(timestamps, tolerance_us=DEFAULT_TOLERANCE_US):
    """ representative time cycles (cluster means) of a message, ascending """

    clusters = cluster_time_differences(np.diff(np.asarray(timestamps, dtype=np.int64)), tolerance_us)

    return [float(c.mean()) for c in clusters]

# ----------------------------------------------------------------------- CYCLE SETS

@dataclass(frozen=True)
class CycleSet:
    """
    Time cycles of one message id.

    `bounds_us` keeps the (min, max) delta of every cluster, aligned with
    `cycles_us`.
    """

    message_id: MessageId
    cycles_us: Tuple[float, ...]
    occurrence_count: int
    bounds_us: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):

        object.__setattr__(self, "cycles_us", tuple(float(c) for c in self.cycles_us))

        bounds = self.bounds_us or [(c, c) for c in self.cycles_us]
        object.__setattr__(self, "bounds_us", tuple((lo, hi) for lo, hi in bounds))

        if len(self.bounds_us) != len(self.cycles_us):
            raise ValueError("one (min, max) extent per cycle")

        if list(self.cycles_us) != sorted(self.cycles_us):
            raise ValueError("cycles_us must be ascending")

    def match(self, delta_us, tolerance_us):
        """ index of the cycle `delta_us` belongs to, None when it fits none """

        hits = [i for i, (lo, hi) in enumerate(self.bounds_us) if lo - tolerance_us <= delta_us <= hi + tolerance_us]

        if not hits:
            return None

        return min(hits, key=lambda i: abs(self.cycles_us[i] - delta_us))

def cycle_set_of(message_id, timestamps, tolerance_us=DEFAULT_TOLERANCE_US):

    clusters = cluster_time_differences(np.diff(np.asarray(timestamps, dtype=np.int64)), tolerance_us)

    return CycleSet(
        message_id=message_id,
        cycles_us=[float(c.mean()) for c in clusters],
        occurrence_count=len(timestamps),
        bounds_us=[(int(c[0]), int(c[-1])) for c in clusters],
    )

def timestamps_by_message(records):

    timestamps = defaultdict(list)
    for r in records:
        timestamps[message_id_of(r)].append(r.timestamp_us)

    return dict(timestamps)

def extract_cycle_sets(records, tolerance_us=DEFAULT_TOLERANCE_US):

    cycle_sets = {m: cycle_set_of(m, ts, tolerance_us) for m, ts in timestamps_by_message(records).items()}

    logger.debug("extracted cycle sets of %d message ids", len(cycle_sets))

    return cycle_sets

def classify_message(cycle_set, rare_count_threshold=DEFAULT_RARE_COUNT, max_cycles_threshold=DEFAULT_MAX_CYCLES):
    """ rare or irregular messages are aperiodic """

    if cycle_set.occurrence_count < rare_count_threshold:
        return MessageClass.APERIODIC

    # a single occurrence has no time difference at all
    if not cycle_set.cycles_us or len(cycle_set.cycles_us) > max_cycles_threshold:
        return MessageClass.APERIODIC

    return MessageClass.PERIODIC
