from pathlib import Path

import numpy as np
import pytest

from omegaconf import OmegaConf

from .bussim import Attack, ScenarioConfig, generate_benign
from .codec import Label, MessageId, record_for
from .experiments import (CURVE_HEADER, FalseAlarmCurve, SplitError, run_scenario, split_log,
                          training_time_sweep, write_curve)
from .topologies import AperiodicEntry, aperiodic_from_dict, get_topology, topology_1, topology_2, with_aperiodic

CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"

LATE = MessageId(None, None, 9, 4, "A", 6, False)


def benign_t2(duration_us=2000000):
    return generate_benign(ScenarioConfig(topology_2(), jitter_us=10, seed=1), duration_us)


def test_split_at_zero():
    records = benign_t2()
    training, test = split_log(records, 0)
    assert training == [] and test == records


def test_split_beyond_log():
    records = benign_t2()
    training, test = split_log(records, 10 ** 9)
    assert training == records and test == []


def test_split_is_chronological():
    records = benign_t2()
    training, test = split_log(records, 1000000)

    assert training + test == records
    assert all(r.timestamp_us < 1000000 for r in training)
    assert all(r.timestamp_us >= 1000000 for r in test)


def test_anomaly_inside_training_window():
    records = benign_t2()
    records[20] = record_for(LATE, records[20].timestamp_us, Label.ANOMALY)

    with pytest.raises(SplitError):
        split_log(records, 1000000)


@pytest.mark.parametrize("topology, attack, duration_ms, window_ms, rate, train_ms, n_test, n_anomaly", [
    (topology_1, Attack.SPOOF1, 14080, (5000, 13640), 3, 4500, 10024, 324),
    (topology_2, Attack.SPOOF2, 24280, (6000, 21220), 1, 4000, 5831, 761),
    (topology_2, Attack.DOS, 20900, (10000, 14700), 10, 4200, 6525, 2350),
])
def test_attack_scenarios_are_detected(topology, attack, duration_ms, window_ms, rate, train_ms, n_test, n_anomaly):
    config = ScenarioConfig(topology(), attack, window_ms[0] * 1000, window_ms[1] * 1000, jitter_us=10, seed=2020, rate=rate)
    result = run_scenario(config, duration_ms * 1000, train_ms * 1000)

    assert len(result.test) == n_test
    assert sum(r.truth_label is Label.ANOMALY for r in result.test) == n_anomaly

    for m in (result.anomaly, result.benign):
        assert (m.precision, m.recall) == (1., 1.), attack


def sweep_log_from_config(path=CONFIG_DIR / "sweep-t1.yaml"):
    cfg = OmegaConf.load(path).sweep

    aperiodic = [aperiodic_from_dict(a) for a in OmegaConf.to_container(cfg.APERIODIC, resolve=True)]
    topology = with_aperiodic(get_topology(cfg.TOPOLOGY), aperiodic)
    config = ScenarioConfig(topology, jitter_us=cfg.JITTER_US, seed=cfg.SEED)

    return generate_benign(config, int(cfg.DURATION_MS * 1000)), int(cfg.SEGMENT_MS * 1000)


def check_vanishing(curve):
    first_zero = curve.first_zero_us()
    assert first_zero is not None and first_zero <= 5000000

    after = [rate for d, rate in curve.points if d >= first_zero]
    assert all(b <= a for a, b in zip(after, after[1:]))
    assert after == [0.] * len(after)


def test_false_alarms_vanish_on_the_sweep_log():
    records, segment_us = sweep_log_from_config()
    assert records[-1].timestamp_us >= 59000000

    curve = training_time_sweep(records, segment_us, max_train_duration_us=6000000)

    assert [d for d, _ in curve.points] == [1200000, 2400000, 3600000, 4800000, 6000000]
    check_vanishing(curve)


def test_false_alarms_vanish_on_a_short_log():
    topology = with_aperiodic(topology_1(), [AperiodicEntry(MessageId(4, 9, None, None, "A", 3, False), 2380, 20000, .5)])
    records = generate_benign(ScenarioConfig(topology, jitter_us=10, seed=2020), 8000000)

    check_vanishing(training_time_sweep(records, 1200000, max_train_duration_us=6000000))


def test_late_message_raises_alarms_until_trained_on():
    records = benign_t2()
    late = [record_for(LATE, 1502000 + k * 20000) for k in range(25)]
    records = sorted(records + late, key=lambda r: r.timestamp_us)

    curve = training_time_sweep(records, 400000)
    rates = [rate for _, rate in curve.points]

    assert len(rates) == 4
    assert all(rate > 0. for rate in rates[:3])
    assert rates[3] == 0.


def test_sweep_workers_agree():
    records = benign_t2(1200000)
    assert training_time_sweep(records, 300000, workers=2) == training_time_sweep(records, 300000)


def test_sweep_rejects_attacks():
    records = benign_t2()
    records[-1] = record_for(LATE, records[-1].timestamp_us, Label.ANOMALY)
    with pytest.raises(SplitError):
        training_time_sweep(records, 400000)


def test_sweep_segment_must_fit():
    with pytest.raises(SplitError):
        training_time_sweep(benign_t2(), 0)
    with pytest.raises(SplitError):
        training_time_sweep(benign_t2(), 10 ** 9)
    with pytest.raises(SplitError):
        training_time_sweep([], 400000)


def test_curve_validation():
    with pytest.raises(ValueError):
        FalseAlarmCurve([(2000, .1), (1000, 0.)])
    with pytest.raises(ValueError):
        FalseAlarmCurve([(1000, 1.5)])

    assert FalseAlarmCurve([(1000, .2), (2000, .1)]).first_zero_us() is None
    assert FalseAlarmCurve([(1000, .2), (2000, 0.), (3000, 0.)]).first_zero_us() == 2000


def test_write_curve(tmp_path):
    curve = FalseAlarmCurve([(1200000, .125), (2400000, 0.)])
    path = tmp_path / "curve.csv"
    write_curve(curve, path)

    assert path.read_text().splitlines()[0] == CURVE_HEADER
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data, [[1200000, .125], [2400000, 0.]])
