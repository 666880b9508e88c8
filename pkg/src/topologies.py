import logging

from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Tuple

from omegaconf import OmegaConf

from src.codec import MessageId, TransferType
from src.utils import make_rng

logger = logging.getLogger(__name__)

MINOR_FRAME_US = 20000

class TopologyError(ValueError):
    pass

@dataclass(frozen=True)
class ScheduleEntry:

    message_id: MessageId
    offset_us: int
    period_us: int

    @property
    def phase_us(self):
        """ first nominal instance, offsets beyond one period wrap """
        return self.offset_us % self.period_us

@dataclass(frozen=True)
class AperiodicEntry:
    """ event-driven message emitted at offset + n * cadence with a seeded probability """

    message_id: MessageId
    offset_us: int
    cadence_us: int
    probability: float

    @property
    def phase_us(self):
        return self.offset_us % self.cadence_us

@dataclass(frozen=True)
class TopologySpec:

    name: str
    major_frame_us: int
    entries: Tuple[ScheduleEntry, ...]
    rt_addresses: FrozenSet[int]
    aperiodic: Tuple[AperiodicEntry, ...] = field(default=())

    def __post_init__(self):

        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "aperiodic", tuple(self.aperiodic))
        object.__setattr__(self, "rt_addresses", frozenset(self.rt_addresses))

        if self.major_frame_us <= 0:
            raise TopologyError(f"{self.name}: major_frame_us must be positive")

        if not self.entries:
            raise TopologyError(f"{self.name}: a topology needs at least one scheduled message")

        for e in self.entries:

            if not 0 <= e.offset_us < self.major_frame_us:
                raise TopologyError(f"{self.name}: offset {e.offset_us} outside the major frame")

            if e.period_us <= 0 or self.major_frame_us % e.period_us:
                raise TopologyError(f"{self.name}: period {e.period_us} does not divide the major frame")

        for a in self.aperiodic:

            if a.cadence_us <= 0 or self.major_frame_us % a.cadence_us:
                raise TopologyError(f"{self.name}: cadence {a.cadence_us} does not divide the major frame")

            if not 0. <= a.probability <= 1.:
                raise TopologyError(f"{self.name}: probability {a.probability} outside [0, 1]")

        ids = [e.message_id for e in self.entries] + [a.message_id for a in self.aperiodic]
        if len(set(ids)) != len(ids):
            raise TopologyError(f"{self.name}: a message id is scheduled twice")

        if self.min_slot_gap_us() <= 0:
            raise TopologyError(f"{self.name}: two messages share a time slot")

    @property
    def message_ids(self):
        return frozenset(e.message_id for e in self.entries) | frozenset(a.message_id for a in self.aperiodic)

    def slot_times(self):
        """ nominal instance times within one major frame, sorted """

        times = []
        for e in self.entries:
            times += range(e.phase_us, self.major_frame_us, e.period_us)

        for a in self.aperiodic:
            times += range(a.phase_us, self.major_frame_us, a.cadence_us)

        return sorted(times)

    def min_slot_gap_us(self):

        times = self.slot_times()
        if len(times) == 1:
            return self.major_frame_us

        gaps = [t2 - t1 for t1, t2 in zip(times, times[1:])]
        gaps.append(times[0] + self.major_frame_us - times[-1])

        return min(gaps)

# ---------------------------------------------------------------------- BUILT-IN TOPOLOGIES

def _bc_to_rt(rt, sa, wc):
    return MessageId(None, None, rt, sa, "A", wc, False)

def _rt_to_bc(rt, sa, wc):
    return MessageId(rt, sa, None, None, "A", wc, False)

def _rt_to_rt(src, src_sa, dst, dst_sa, wc):
    return MessageId(src, src_sa, dst, dst_sa, "A", wc, False)

def _broadcast(sa, wc):
    return MessageId(None, None, None, sa, "A", wc, False)

def _mode_code(rt, with_data=False, transmit=False):
    if transmit:
        # the RT sources the data word, e.g. transmit vector word
        return MessageId(rt, 31, None, None, "A", 1, True)

    return MessageId(None, None, rt, 31, "A", int(with_data), True)

def _evenly_spaced(name, major_frame_us, messages, rt_addresses):
    """ entry k at k * major_frame / n """

    n = len(messages)
    entries = [ScheduleEntry(m, k * major_frame_us // n, period) for k, (m, period) in enumerate(messages)]

    return TopologySpec(name, major_frame_us, entries, rt_addresses)

def topology_1():
    """ 16 benign RTs, 80 ms major frame, 20 messages at 20 ms and one at 80 ms """

    fast = [
        _bc_to_rt(1, 1, 8),
        _rt_to_bc(2, 1, 4),
        _bc_to_rt(3, 2, 16),
        _rt_to_rt(4, 1, 5, 1, 6),
        _bc_to_rt(6, 3, 2),
        _rt_to_bc(7, 2, 12),
        _bc_to_rt(8, 1, 4),
        _rt_to_bc(9, 1, 32),
        _bc_to_rt(10, 4, 6),
        _rt_to_bc(11, 3, 8),
        _bc_to_rt(12, 2, 10),
        _mode_code(13),
        _rt_to_bc(14, 1, 2),
        _bc_to_rt(15, 5, 20),
        _rt_to_rt(16, 2, 1, 3, 4),
        _bc_to_rt(5, 7, 16), # forwards the 80 ms query data
        _rt_to_bc(3, 4, 1),
        _broadcast(9, 16),
        _bc_to_rt(2, 6, 3),
        _rt_to_bc(10, 2, 5),
    ]
    # the BC queries RT 8, then distributes its data
    query = _rt_to_bc(8, 5, 16)

    messages = [(m, MINOR_FRAME_US) for m in fast] + [(query, 4 * MINOR_FRAME_US)]

    return _evenly_spaced("topology_1", 4 * MINOR_FRAME_US, messages, range(1, 17))

def topology_2():
    """ BC querying two RTs then broadcasting updates, 20 ms major frame """

    messages = [
        (_rt_to_bc(1, 1, 4), MINOR_FRAME_US),
        (_rt_to_bc(2, 1, 4), MINOR_FRAME_US),
        (_broadcast(2, 8), MINOR_FRAME_US),
        (_bc_to_rt(1, 2, 2), MINOR_FRAME_US),
        (_mode_code(2), MINOR_FRAME_US),
    ]

    return _evenly_spaced("topology_2", MINOR_FRAME_US, messages, (1, 2))

TOPOLOGIES = {
    "t1": topology_1,
    "t2": topology_2,
}

# ---------------------------------------------------------------------- DECLARATIVE FILES

def _entry_from_dict(data, aperiodic=False):

    message_id = MessageId.from_dict(dict(data["message"]))

    if aperiodic:
        return AperiodicEntry(message_id, int(data["offset_us"]), int(data["cadence_us"]), float(data["probability"]))

    return ScheduleEntry(message_id, int(data["offset_us"]), int(data["period_us"]))

def topology_from_dict(data):

    try:
        return TopologySpec(
            name=str(data.get("name", "custom")),
            major_frame_us=int(data["major_frame_us"]),
            entries=[_entry_from_dict(e) for e in data["entries"]],
            rt_addresses=[int(a) for a in data.get("rt_addresses", [])],
            aperiodic=[_entry_from_dict(a, aperiodic=True) for a in data.get("aperiodic") or []],
        )

    except (KeyError, TypeError) as e:
        raise TopologyError(f"malformed topology description: {e!r}")

def topology_to_dict(topology):

    return {
        "name": topology.name,
        "major_frame_us": topology.major_frame_us,
        "rt_addresses": sorted(topology.rt_addresses),
        "entries": [dict(message=e.message_id.to_dict(), offset_us=e.offset_us, period_us=e.period_us) for e in topology.entries],
        "aperiodic": [dict(message=a.message_id.to_dict(), offset_us=a.offset_us, cadence_us=a.cadence_us, probability=a.probability) for a in topology.aperiodic],
    }

def load_topology(path):

    path = Path(path)
    if not path.exists():
        raise TopologyError(f"topology file {path} not found")

    data = OmegaConf.to_container(OmegaConf.load(path), resolve=True)
    topology = topology_from_dict(data)

    logger.info("loaded topology %s from %s (%d messages)", topology.name, path, len(topology.message_ids))

    return topology

def get_topology(name_or_path):
    """ built-in name ('t1', 't2') or a YAML topology file """

    if name_or_path in TOPOLOGIES:
        return TOPOLOGIES[name_or_path]()

    return load_topology(name_or_path)

def aperiodic_from_dict(data):
    return _entry_from_dict(data, aperiodic=True)

def with_aperiodic(topology, aperiodic):

    return TopologySpec(topology.name, topology.major_frame_us, topology.entries, topology.rt_addresses, tuple(topology.aperiodic) + tuple(aperiodic))

# ---------------------------------------------------------------------- RANDOM SCHEDULES

SLOT_US = 500

def _random_message_id(rng):

    kind = rng.choice([t.value for t in TransferType])
    rt, other = (int(a) for a in rng.choice(30, size=2, replace=False) + 1)
    sa, other_sa = (int(s) for s in rng.integers(1, 31, size=2))
    wc = int(rng.integers(1, 33))

    if kind == TransferType.BC_TO_RT.value:
        return _bc_to_rt(rt, sa, wc)

    if kind == TransferType.RT_TO_BC.value:
        return _rt_to_bc(rt, sa, wc)

    if kind == TransferType.RT_TO_RT.value:
        return _rt_to_rt(rt, sa, other, other_sa, wc)

    if kind == TransferType.BROADCAST.value:
        return _broadcast(sa, wc)

    variant = int(rng.integers(3))
    return _mode_code(rt, with_data=variant > 0, transmit=variant == 2)

def random_topology(seed, max_messages=12, max_aperiodic=2):
    """ random schedule on a 500 us slot grid, every message in its own slot """

    rng = make_rng(seed, 0)

    minor_frames = int(rng.choice([1, 2, 4]))
    major_frame_us = minor_frames * MINOR_FRAME_US

    n_periodic = int(rng.integers(2, max_messages + 1))
    n_aperiodic = int(rng.integers(0, max_aperiodic + 1))

    message_ids = []
    while len(message_ids) < n_periodic + n_aperiodic:
        m = _random_message_id(rng)
        if m not in message_ids:
            message_ids.append(m)

    slots = rng.choice(MINOR_FRAME_US // SLOT_US, size=n_periodic + n_aperiodic, replace=False)

    entries, aperiodic = [], []
    for i, (m, slot) in enumerate(zip(message_ids, slots)):

        slow = minor_frames > 1 and rng.random() < 0.3
        period = major_frame_us if slow else MINOR_FRAME_US
        offset = int(slot) * SLOT_US + (int(rng.integers(minor_frames)) * MINOR_FRAME_US if slow else 0)

        if i < n_periodic:
            entries.append(ScheduleEntry(m, offset, period))
        else:
            aperiodic.append(AperiodicEntry(m, offset, period, float(rng.uniform(0.1, 0.6))))

    rt_addresses = {a for m in message_ids for a in (m.src_terminal, m.dst_terminal) if a is not None}

    return TopologySpec(f"random-{seed}", major_frame_us, entries, rt_addresses, aperiodic)
