from collections import Counter
from pathlib import Path

import pytest

from .codec import MessageId, TransferType, transfer_type_of
from .topologies import (AperiodicEntry, ScheduleEntry, TopologyError, TopologySpec, get_topology, load_topology,
                         random_topology, topology_1, topology_2, topology_from_dict, topology_to_dict, with_aperiodic)

EXAMPLE = Path(__file__).resolve().parent.parent / "config" / "topology" / "example.yaml"


def bc_to_rt(rt, sa=1, wc=2):
    return MessageId(None, None, rt, sa, "A", wc, False)


def test_topology_1_schedule():
    t = topology_1()
    assert t.major_frame_us == 80000
    assert len(t.message_ids) == 21
    assert Counter(e.period_us for e in t.entries) == {20000: 20, 80000: 1}
    assert t.rt_addresses == frozenset(range(1, 17))


def test_topology_2_schedule():
    t = topology_2()
    assert t.major_frame_us == 20000
    assert len(t.message_ids) == 5
    assert {e.period_us for e in t.entries} == {20000}
    assert sum(transfer_type_of(m) is TransferType.BROADCAST for m in t.message_ids) == 1


def test_builtin_names():
    assert get_topology("t1") == topology_1()
    assert get_topology("t2") == topology_2()


def test_slot_gap_of_topology_1():
    assert topology_1().min_slot_gap_us() == 952


def test_load_example_file():
    t = load_topology(EXAMPLE)
    assert t.name == "example"
    assert len(t.entries) == 4
    assert len(t.aperiodic) == 1
    assert t.aperiodic[0].probability == 0.25
    assert get_topology(str(EXAMPLE)) == t


def test_dict_roundtrip():
    t = with_aperiodic(topology_1(), [AperiodicEntry(MessageId(4, 9, None, None, "A", 3, False), 2380, 20000, .5)])
    assert topology_from_dict(topology_to_dict(t)) == t


def test_missing_file():
    with pytest.raises(TopologyError):
        load_topology("does/not/exist.yaml")


def test_malformed_description():
    with pytest.raises(TopologyError):
        topology_from_dict({"name": "x", "entries": []})


@pytest.mark.parametrize("entries", [
    [ScheduleEntry(bc_to_rt(1), 0, 30000)],                                  # period does not divide
    [ScheduleEntry(bc_to_rt(1), 20000, 20000)],                              # offset outside the frame
    [ScheduleEntry(bc_to_rt(1), 0, 20000), ScheduleEntry(bc_to_rt(1), 500, 20000)],  # same id twice
    [ScheduleEntry(bc_to_rt(1), 0, 10000), ScheduleEntry(bc_to_rt(2), 10000, 20000)],  # same slot
    [],
])
def test_invalid_schedules(entries):
    with pytest.raises(TopologyError):
        TopologySpec("bad", 20000, entries, {1, 2})


def test_invalid_aperiodic_probability():
    with pytest.raises(TopologyError):
        TopologySpec("bad", 20000, [ScheduleEntry(bc_to_rt(1), 0, 20000)], {1},
                     [AperiodicEntry(bc_to_rt(2), 500, 20000, 1.5)])


def test_random_topologies_are_valid_and_seeded():
    for seed in range(100):
        t = random_topology(seed)
        assert t.min_slot_gap_us() >= 500
        assert t.major_frame_us in (20000, 40000, 80000)
        assert random_topology(seed) == t
