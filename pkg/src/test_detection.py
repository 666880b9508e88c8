import numpy as np

from .bussim import ScenarioConfig, generate_benign, spoof1_targets
from .codec import Label, MessageId, message_id_of, record_for
from .cycles import MessageClass
from .detection import DetectorState, detect, detect_log
from .markov import train
from .topologies import random_topology, topology_1, topology_2


def flagged(labeled):
    return [r for r in labeled if r.predicted_label is Label.ANOMALY]


def insert(records, record):
    return sorted(records + [record], key=lambda r: r.timestamp_us)


def test_replay_of_training_log_is_benign():
    """Test the threshold never flags the sequence it was computed on"""
    for seed in range(100):
        topology = random_topology(seed)
        config = ScenarioConfig(topology, jitter_us=int(seed % 40), seed=seed)
        records = generate_benign(config, 20 * topology.major_frame_us)

        labeled = detect_log(records, train(records))
        assert flagged(labeled) == [], seed


def test_first_message_of_stream_is_benign():
    records = generate_benign(ScenarioConfig(topology_2()), 400000)
    pair = train(records)

    state = DetectorState()
    assert detect(records[7], state, pair) is Label.BENIGN
    assert state.last_benign_us == {message_id_of(records[7]): records[7].timestamp_us}


def test_unknown_message_is_anomaly():
    records = generate_benign(ScenarioConfig(topology_2()), 400000)
    pair = train(records)

    fake = record_for(MessageId(None, None, None, 2, "A", 32, False), records[50].timestamp_us + 2000, Label.ANOMALY)
    labeled = detect_log(insert(records, fake), pair)

    assert [r.timestamp_us for r in flagged(labeled)] == [fake.timestamp_us]


def test_spoofed_copy_before_genuine_message():
    """Test an injected copy of a scheduled message does not drag its successors down"""
    topology = topology_1()
    config = ScenarioConfig(topology, jitter_us=10, seed=8)
    records = generate_benign(config, 2400000)

    training = [r for r in records if r.timestamp_us < 1200000]
    test = [r for r in records if r.timestamp_us >= 1200000]
    pair = train(training)

    anchor, victim = spoof1_targets(topology)
    query = next(i for i, r in enumerate(test) if message_id_of(r) == anchor.message_id)
    genuine = test[query + 1]
    assert message_id_of(genuine) == victim.message_id

    fake = record_for(victim.message_id, (test[query].timestamp_us + genuine.timestamp_us) // 2, Label.ANOMALY)
    labeled = detect_log(insert(test, fake), pair)

    assert [r.timestamp_us for r in flagged(labeled)] == [fake.timestamp_us]


def split_topology_2(seed=3):
    records = generate_benign(ScenarioConfig(topology_2(), jitter_us=10, seed=seed), 8000000)
    training = [r for r in records if r.timestamp_us < 4000000]
    test = [r for r in records if r.timestamp_us >= 4000000]
    return train(training), test


def test_late_record_does_not_desynchronise_its_message():
    pair, test = split_topology_2()

    # five messages per minor frame, test[55] is the next instance of the same id
    late = record_for(message_id_of(test[50]), test[50].timestamp_us + 100)
    test[50] = late
    assert message_id_of(test[55]) == message_id_of(late)

    labeled = detect_log(test, pair)
    assert [r.timestamp_us for r in flagged(labeled)] == [late.timestamp_us, test[55].timestamp_us]


def test_missing_record_does_not_desynchronise_its_message():
    pair, test = split_topology_2()

    after, next_instance = test[51], test[55]
    del test[50]

    labeled = detect_log(test, pair)
    assert [r.timestamp_us for r in flagged(labeled)] == [after.timestamp_us, next_instance.timestamp_us]


def test_off_cycle_instances_keep_their_order_context():
    pair, test = split_topology_2(seed=4)
    m = message_id_of(test[50])

    # every instance of one id late by 100 us from test[50] on
    shifted = [record_for(m, r.timestamp_us + 100) if k >= 50 and message_id_of(r) == m else r for k, r in enumerate(test)]

    labeled = detect_log(shifted, pair)
    assert [r.timestamp_us for r in flagged(labeled)] == [shifted[50].timestamp_us]


def test_single_injection_flags_only_itself():
    """Test one crafted record into a benign log yields exactly one anomaly"""
    rng = np.random.default_rng(42)

    for seed in range(30):
        topology = random_topology(seed)
        records = generate_benign(ScenarioConfig(topology, jitter_us=int(seed % 20), seed=seed), 20 * topology.major_frame_us)
        pair = train(records)

        # scheduled ids always occupy their own slots, so a gap midpoint is off-cycle for them
        periodic = [e.message_id for e in topology.entries if pair.classification[e.message_id] is MessageClass.PERIODIC]
        novel = MessageId(None, None, 30, 30, "B", 31, False)
        assert novel not in pair.classification

        for message_id in (novel, periodic[int(rng.integers(len(periodic)))]):

            # after two major frames every scheduled id has been seen once
            start = next(i for i, r in enumerate(records) if r.timestamp_us >= 2 * topology.major_frame_us)
            i = int(rng.integers(start, len(records) - 1))
            t = (records[i].timestamp_us + records[i + 1].timestamp_us) // 2

            labeled = detect_log(insert(records, record_for(message_id, t, Label.ANOMALY)), pair)
            assert [r.timestamp_us for r in flagged(labeled)] == [t], (seed, message_id)


def test_detection_is_deterministic():
    records = generate_benign(ScenarioConfig(random_topology(9), jitter_us=5, seed=9), 1600000)
    pair = train(records[:len(records) // 2])
    assert detect_log(records, pair) == detect_log(records, pair)


def test_detect_log_keeps_truth():
    records = generate_benign(ScenarioConfig(topology_2()), 400000)
    labeled = detect_log(records, train(records))

    assert [r.truth_label for r in labeled] == [r.truth_label for r in records]
    assert all(r.predicted_label is Label.BENIGN for r in labeled)
