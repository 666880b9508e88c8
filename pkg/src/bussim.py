"""
Deterministic bus traffic generation.

Benign traffic follows the topology schedule with seeded uniform jitter.
The three attack injectors add Anomaly-labeled records on top of a benign
log and never move or relabel benign records.
"""
import itertools
import logging

from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.codec import (CommandWordFields, Label, MessageId, TransferType, command_word_hex, message_id_of, record_for,
                       transfer_type_of)
from src.topologies import TopologySpec
from src.utils import APERIODIC_STREAM, ATTACK_STREAM, JITTER_STREAM, make_rng

logger = logging.getLogger(__name__)

CLUSTERING_TOLERANCE_US = 40
DEFAULT_MIN_IDLE_US = 400

class ScenarioError(ValueError):
    pass

class Attack(str, Enum):
    NONE = "none"
    SPOOF1 = "spoof1"
    SPOOF2 = "spoof2"
    DOS = "dos"

@dataclass(frozen=True)
class ScenarioConfig:
    """
    :param rate: injections after each anchor message (spoofing) or fake
        commands per major frame (DoS)
    :param min_idle_us: shortest bus idle gap a spoofed message is slipped into
    """

    topology: TopologySpec
    attack: Attack = Attack.NONE
    attack_start_us: int = 0
    attack_end_us: int = 0
    jitter_us: int = 0
    seed: int = 0
    rate: int = 1
    min_idle_us: int = DEFAULT_MIN_IDLE_US

    def __post_init__(self):

        object.__setattr__(self, "attack", Attack(self.attack))

        if not 0 <= self.jitter_us < CLUSTERING_TOLERANCE_US:
            raise ScenarioError(f"jitter_us={self.jitter_us} must be in [0, {CLUSTERING_TOLERANCE_US})")

        if 2 * self.jitter_us >= self.topology.min_slot_gap_us():
            raise ScenarioError(f"jitter_us={self.jitter_us} lets neighbouring slots swap in {self.topology.name}")

        if self.rate < 0:
            raise ScenarioError("rate must be non-negative")

        if self.attack is not Attack.NONE and not 0 <= self.attack_start_us < self.attack_end_us:
            raise ScenarioError(f"empty attack window [{self.attack_start_us}, {self.attack_end_us})")

    def in_window(self, timestamp_us):
        return self.attack_start_us <= timestamp_us < self.attack_end_us

# ---------------------------------------------------------------------- BENIGN TRAFFIC

def generate_benign(config, duration_us):
    """ every schedule instance at offset + k * period (+ jitter) in [0, duration) """

    topology = config.topology

    if duration_us == 0:
        return []

    if duration_us < topology.major_frame_us:
        raise ScenarioError(f"duration {duration_us} us is shorter than one major frame ({topology.major_frame_us} us)")

    nominal = []
    for e in topology.entries:
        nominal += [(int(t), e.message_id) for t in np.arange(e.phase_us, duration_us, e.period_us)]

    # event-driven traffic, one draw per cadence slot
    rng = make_rng(config.seed, APERIODIC_STREAM)
    for a in topology.aperiodic:
        slots = np.arange(a.phase_us, duration_us, a.cadence_us)
        emitted = slots[rng.random(len(slots)) < a.probability]
        nominal += [(int(t), a.message_id) for t in emitted]

    nominal.sort(key=lambda x: x[0])

    if config.jitter_us:
        jitter = make_rng(config.seed, JITTER_STREAM).integers(-config.jitter_us, config.jitter_us + 1, size=len(nominal))
    else:
        jitter = np.zeros(len(nominal), dtype=int)

    records = [record_for(m, max(0, t + int(j)), Label.BENIGN) for (t, m), j in zip(nominal, jitter)]

    logger.info("generated %d benign records over %d us on %s", len(records), duration_us, topology.name)

    return records

# ---------------------------------------------------------------------- ATTACKS

def spoof1_targets(topology):
    """ (anchor, victim): the slowest RT->BC query and the BC->RT message forwarding it """

    queries = [e for e in topology.entries if _transfer(e) is TransferType.RT_TO_BC]
    if not queries:
        raise ScenarioError(f"{topology.name} has no RT->BC exchange to shadow")

    anchor = max(queries, key=lambda e: e.period_us)

    forwards = [e for e in topology.entries if _transfer(e) is TransferType.BC_TO_RT]
    if not forwards:
        raise ScenarioError(f"{topology.name} has no BC->RT message to spoof")

    # first BC->RT instance after the anchor
    victim = min(forwards, key=lambda e: (e.phase_us - anchor.offset_us) % e.period_us)

    return anchor, victim

def spoof2_anchor(topology):

    broadcasts = [e for e in topology.entries if _transfer(e) is TransferType.BROADCAST]
    if not broadcasts:
        raise ScenarioError(f"{topology.name} has no scheduled broadcast")

    return broadcasts[0]

def _transfer(entry):
    return transfer_type_of(entry.message_id)

def _merge(benign, injected):

    return sorted(list(benign) + injected, key=lambda r: r.timestamp_us)

def _inject_after_anchors(benign, anchor_id, config, message_id):
    """ one record per idle gap following each anchor instance in the window """

    if config.rate == 0 or config.attack_start_us >= config.attack_end_us:
        return list(benign)

    major = config.topology.major_frame_us
    injected, skipped = [], 0

    for i, record in enumerate(benign):

        if not config.in_window(record.timestamp_us) or message_id_of(record) != anchor_id:
            continue

        gaps = []
        for before, after in zip(benign[i:], benign[i + 1:]):

            if after.timestamp_us >= record.timestamp_us + major or len(gaps) == config.rate:
                break

            if after.timestamp_us - before.timestamp_us >= config.min_idle_us:
                gaps.append((before.timestamp_us + after.timestamp_us) // 2)

        if len(gaps) < config.rate:
            skipped += 1
            continue

        injected += [record_for(message_id, t, Label.ANOMALY) for t in gaps]
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("spoofed %s after the anchor at %d us", command_word_hex(injected[-1]), record.timestamp_us)

    if skipped:
        logger.warning("%d frame(s) skipped: fewer than %d idle gaps of %d us", skipped, config.rate, config.min_idle_us)

    logger.info("injected %d spoofed records", len(injected))

    return _merge(benign, injected)

def inject_spoof1(benign, config):
    """ fake BC->RT copies of the victim slipped into idle time after the query exchange """

    anchor, victim = spoof1_targets(config.topology)

    return _inject_after_anchors(benign, anchor.message_id, config, victim.message_id)

def spoof2_message_id(topology):
    """ broadcast on the scheduled subaddress with a word count nobody schedules """

    anchor = spoof2_anchor(topology).message_id
    scheduled = {m.word_count for m in topology.message_ids if m.dst_terminal is None and m.dst_subaddress is not None}

    for wc in range(32, 0, -1):
        candidate = MessageId(None, None, None, anchor.dst_subaddress, anchor.channel, wc, False)

        if wc not in scheduled and candidate not in topology.message_ids:
            return candidate

    raise ScenarioError(f"no free broadcast word count in {topology.name}")

def inject_spoof2(benign, config):
    """ fake broadcasts sent on behalf of the BC right after its own broadcast """

    anchor = spoof2_anchor(config.topology)

    return _inject_after_anchors(benign, anchor.message_id, config, spoof2_message_id(config.topology))

def _fake_command(rng, known):
    """ random BC->RT receive command, re-drawn while it names a scheduled message """

    while True:
        word = CommandWordFields(
            terminal_address=int(rng.integers(0, 31)),
            transmit_receive=0,
            subaddress_mode=int(rng.integers(1, 31)),
            word_count_or_mode_code=int(rng.integers(0, 32)),
        )
        m = MessageId(None, None, word.terminal_address, word.subaddress_mode, "A", word.data_word_count, False)
        if m not in known:
            return m

def _free_timestamp(t, occupied, start_us, end_us):
    """ first free microsecond at or after t, searching back from t when the window tail is full """

    for u in itertools.chain(range(t, end_us), range(t - 1, start_us - 1, -1)):
        if u not in occupied:
            return u

    raise ScenarioError(f"no free timestamp left in the attack window [{start_us}, {end_us})")

def inject_dos(benign, config):
    """ flood of BC->RT commands to random terminals, `rate` per major frame """

    if config.rate == 0 or config.attack_start_us >= config.attack_end_us:
        return list(benign)

    rng = make_rng(config.seed, ATTACK_STREAM)
    known = config.topology.message_ids

    interval = max(1, config.topology.major_frame_us // config.rate)
    n_commands = (config.attack_end_us - config.attack_start_us) // interval

    occupied = {r.timestamp_us for r in benign}
    injected, collisions = [], 0

    for i in range(n_commands):

        drawn = config.attack_start_us + i * interval + int(rng.integers(interval))
        t = _free_timestamp(drawn, occupied, config.attack_start_us, config.attack_end_us)
        collisions += abs(t - drawn)

        occupied.add(t)
        injected.append(record_for(_fake_command(rng, known), t, Label.ANOMALY))
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("flood command %s at %d us", command_word_hex(injected[-1]), t)

    if collisions:
        logger.debug("moved flood commands by %d us in total to keep timestamps unique", collisions)

    logger.info("injected %d flood commands", len(injected))

    return _merge(benign, injected)

INJECTORS = {
    Attack.SPOOF1: inject_spoof1,
    Attack.SPOOF2: inject_spoof2,
    Attack.DOS: inject_dos,
}

def simulate(config, duration_us):
    """ benign traffic plus the configured attack """

    if config.attack is not Attack.NONE and config.attack_end_us > duration_us:
        raise ScenarioError(f"attack window ends at {config.attack_end_us} us, after the log ({duration_us} us)")

    records = generate_benign(config, duration_us)

    if config.attack is Attack.NONE:
        return records

    return INJECTORS[config.attack](records, config)
