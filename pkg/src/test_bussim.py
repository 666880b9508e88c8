from collections import defaultdict

import pytest

from .bussim import (Attack, ScenarioConfig, ScenarioError, _free_timestamp, generate_benign, inject_dos,
                     inject_spoof1, inject_spoof2, simulate, spoof1_targets, spoof2_message_id)
from .codec import (Label, MessageId, TransferType, check_sorted, command_words, decode_command_word, encode_command_word,
                    message_id_of, record_to_line)
from .topologies import AperiodicEntry, topology_1, topology_2, with_aperiodic


def by_message(records):
    ts = defaultdict(list)
    for r in records:
        ts[message_id_of(r)].append(r.timestamp_us)
    return ts


def anomalies(records):
    return [r for r in records if r.truth_label is Label.ANOMALY]


def test_topology_2_one_frame():
    records = generate_benign(ScenarioConfig(topology_2()), 20000)
    assert len(records) == 5
    assert all(r.truth_label is Label.BENIGN for r in records)


def test_topology_1_one_frame():
    assert len(generate_benign(ScenarioConfig(topology_1()), 80000)) == 20 * 4 + 1


def test_zero_duration_is_empty():
    assert generate_benign(ScenarioConfig(topology_1()), 0) == []


def test_duration_shorter_than_major_frame():
    with pytest.raises(ScenarioError):
        generate_benign(ScenarioConfig(topology_1()), 40000)


def test_exact_periods_without_jitter():
    t = topology_1()
    periods = {e.message_id: e.period_us for e in t.entries}

    for m, ts in by_message(generate_benign(ScenarioConfig(t), 800000)).items():
        assert {b - a for a, b in zip(ts, ts[1:])} == {periods[m]}


def test_jitter_stays_in_bounds():
    t = topology_1()
    config = ScenarioConfig(t, jitter_us=15, seed=3)
    records = generate_benign(config, 800000)
    check_sorted(records)

    nominal = generate_benign(ScenarioConfig(t), 800000)
    assert len(records) == len(nominal)
    assert max(abs(a.timestamp_us - b.timestamp_us) for a, b in zip(records, nominal)) <= 15
    assert any(a.timestamp_us != b.timestamp_us for a, b in zip(records, nominal))


def test_jitter_must_stay_below_tolerance():
    with pytest.raises(ScenarioError):
        ScenarioConfig(topology_2(), jitter_us=40)


def test_same_seed_same_log():
    t = with_aperiodic(topology_1(), [AperiodicEntry(MessageId(4, 9, None, None, "A", 3, False), 2380, 20000, .5)])
    config = ScenarioConfig(t, jitter_us=10, seed=11)

    first = [record_to_line(r) for r in generate_benign(config, 2000000)]
    assert first == [record_to_line(r) for r in generate_benign(config, 2000000)]

    other = [record_to_line(r) for r in generate_benign(ScenarioConfig(t, jitter_us=10, seed=12), 2000000)]
    assert first != other


def test_aperiodic_traffic_is_sparse():
    m = MessageId(4, 9, None, None, "A", 3, False)
    t = with_aperiodic(topology_1(), [AperiodicEntry(m, 2380, 20000, .5)])

    n = len(by_message(generate_benign(ScenarioConfig(t, seed=1), 4000000))[m])
    assert 50 < n < 150 # 200 slots at p = 0.5


def test_spoof1_targets():
    anchor, victim = spoof1_targets(topology_1())
    assert anchor.period_us == 80000
    assert victim.message_id == MessageId(None, None, 5, 7, "A", 16, False)


def test_spoof1_one_injection_per_frame():
    config = ScenarioConfig(topology_1(), Attack.SPOOF1, 800000, 1600000, jitter_us=5, seed=4)
    benign = generate_benign(config, 2400000)
    records = inject_spoof1(benign, config)

    injected = anomalies(records)
    assert len(injected) == 10
    assert {message_id_of(r) for r in injected} == {spoof1_targets(config.topology)[1].message_id}
    assert [r for r in records if r.truth_label is Label.BENIGN] == benign
    check_sorted(records)


def test_spoof1_rate():
    config = ScenarioConfig(topology_1(), Attack.SPOOF1, 800000, 1600000, rate=3)
    assert len(anomalies(simulate(config, 2400000))) == 30


def test_empty_window_leaves_log_untouched():
    config = ScenarioConfig(topology_1())
    benign = generate_benign(config, 800000)
    assert inject_spoof1(benign, config) == benign
    assert inject_dos(benign, config) == benign


def test_spoof1_skips_frames_without_idle_time():
    config = ScenarioConfig(topology_1(), Attack.SPOOF1, 0, 800000, min_idle_us=5000)
    records = simulate(config, 800000)
    assert anomalies(records) == []


def test_spoof2_single_frame():
    config = ScenarioConfig(topology_2(), Attack.SPOOF2, 100000, 120000)
    records = simulate(config, 200000)

    (fake,) = anomalies(records)
    assert fake.transfer_type is TransferType.BROADCAST
    assert message_id_of(fake) not in topology_2().message_ids
    assert message_id_of(fake) == spoof2_message_id(topology_2())


def test_dos_flood():
    config = ScenarioConfig(topology_2(), Attack.DOS, 100000, 300000, seed=9, rate=10)
    records = simulate(config, 400000)
    check_sorted(records)

    injected = anomalies(records)
    assert len(injected) == 100
    assert all(0 <= r.dst_terminal <= 30 for r in injected)
    assert all(100000 <= r.timestamp_us < 300000 for r in injected)
    assert not {message_id_of(r) for r in injected} & topology_2().message_ids


def test_dos_rate_zero():
    config = ScenarioConfig(topology_2(), Attack.DOS, 100000, 300000, rate=0)
    assert simulate(config, 400000) == generate_benign(config, 400000)


def test_dos_collisions_stay_in_window():
    config = ScenarioConfig(topology_2(), Attack.DOS, 100000, 120000, rate=10000, seed=1)
    records = simulate(config, 200000)
    check_sorted(records)

    injected = anomalies(records)
    assert len(injected) == 10000
    assert all(100000 <= r.timestamp_us < 120000 for r in injected)


def test_flood_timestamp_searches_back_from_window_end():
    assert _free_timestamp(118, {118, 119}, 100, 120) == 117
    assert _free_timestamp(105, {105}, 100, 120) == 106
    with pytest.raises(ScenarioError):
        _free_timestamp(100, {100, 101}, 100, 102)


def test_dos_window_too_small():
    config = ScenarioConfig(topology_2(), Attack.DOS, 100000, 120000, rate=20000, seed=1)
    with pytest.raises(ScenarioError):
        simulate(config, 200000)


def test_flood_commands_are_receive_commands():
    config = ScenarioConfig(topology_2(), Attack.DOS, 100000, 300000, seed=9, rate=10)

    for r in anomalies(simulate(config, 400000)):
        (word,) = command_words(r)
        assert decode_command_word(encode_command_word(word)) == word
        assert (word.terminal_address, word.transmit_receive, word.subaddress_mode) == (r.dst_terminal, 0, r.dst_subaddress)
        assert word.data_word_count == r.word_count


def test_attack_window_after_log_end():
    config = ScenarioConfig(topology_2(), Attack.DOS, 100000, 300000)
    with pytest.raises(ScenarioError):
        simulate(config, 200000)


def test_empty_attack_window_is_rejected():
    with pytest.raises(ScenarioError):
        ScenarioConfig(topology_2(), Attack.SPOOF2, 100000, 100000)
