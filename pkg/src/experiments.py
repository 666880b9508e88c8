import logging

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from tqdm import tqdm

from src.bussim import simulate
from src.codec import Label
from src.detection import detect_log
from src.markov import ModelPair, TrainingParams, train
from src.metrics import ClassMetrics, evaluate, false_alarm_rate

logger = logging.getLogger(__name__)

CURVE_HEADER = "training_duration_us,false_alarm_rate"

class SplitError(ValueError):
    pass

def split_log(records, train_duration_us):
    """
    Chronological split at `train_duration_us` from the start of the
    recording (time 0): records before it train, the rest test.
    """

    if train_duration_us < 0:
        raise SplitError(f"negative training duration {train_duration_us}")

    records = list(records)
    cut = next((i for i, r in enumerate(records) if r.timestamp_us >= train_duration_us), len(records))

    training, test = records[:cut], records[cut:]

    dirty = next((r for r in training if r.truth_label is Label.ANOMALY), None)
    if dirty is not None:
        raise SplitError(f"anomalous record at {dirty.timestamp_us} us inside the {train_duration_us} us training window")

    return training, test

# ----------------------------------------------------------------------- ATTACK SCENARIOS

@dataclass(frozen=True)
class ScenarioResult:

    training: List
    test: List
    predicted: List
    anomaly: ClassMetrics
    benign: ClassMetrics
    model_pair: ModelPair

    @property
    def anomaly_share(self):
        return sum(r.truth_label is Label.ANOMALY for r in self.test) / len(self.test) if self.test else 0.

def run_scenario(config, duration_us, train_duration_us, params=TrainingParams()):
    """ simulate, split, train, detect and evaluate one attack scenario """

    records = simulate(config, duration_us)
    training, test = split_log(records, train_duration_us)

    model_pair = train(training, params)
    predicted = detect_log(test, model_pair)

    anomaly, benign = evaluate(predicted, test)

    logger.info(
        "%s on %s: %d training / %d test records, anomaly precision %.4f recall %.4f",
        config.attack.value, config.topology.name, len(training), len(test), anomaly.precision, anomaly.recall,
    )

    return ScenarioResult(training, test, predicted, anomaly, benign, model_pair)

# ----------------------------------------------------------------------- TRAINING TIME SWEEP

@dataclass(frozen=True)
class FalseAlarmCurve:

    points: Tuple[Tuple[int, float], ...]

    def __post_init__(self):

        object.__setattr__(self, "points", tuple((int(d), float(r)) for d, r in self.points))

        durations = [d for d, _ in self.points]
        if any(b <= a for a, b in zip(durations, durations[1:])):
            raise ValueError("training durations must be strictly increasing")

        if any(not 0. <= r <= 1. for _, r in self.points):
            raise ValueError("false alarm rates must lie in [0, 1]")

    def first_zero_us(self):
        """ shortest training duration with no false alarm, None if never reached """
        return next((d for d, r in self.points if r == 0.), None)

def _sweep_point(args):

    records, train_duration_us, params = args

    training, test = split_log(records, train_duration_us)
    anomaly, _ = evaluate(detect_log(test, train(training, params)), test)

    return train_duration_us, false_alarm_rate(anomaly)

def training_time_sweep(records, segment_duration_us, params=TrainingParams(), max_train_duration_us=None, workers=1, monitor=None):
    """
    False alarm rate on the rest of a benign log after training on its first
    k segments, k = 1, 2, ... until nothing is left to test.
    """

    records = list(records)

    if not records:
        raise SplitError("cannot sweep an empty log")

    if any(r.truth_label is Label.ANOMALY for r in records):
        raise SplitError("the training time sweep needs an all-benign log")

    last_us = records[-1].timestamp_us
    if not 0 < segment_duration_us <= last_us:
        raise SplitError(f"segment of {segment_duration_us} us does not fit in a log ending at {last_us} us")

    stop_us = last_us if max_train_duration_us is None else min(last_us, max_train_duration_us)
    durations = list(range(segment_duration_us, stop_us + 1, segment_duration_us))

    jobs = [(records, d, params) for d in durations]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(tqdm(pool.map(_sweep_point, jobs), total=len(jobs), desc="training time"))
    else:
        points = [_sweep_point(job) for job in tqdm(jobs, desc="training time")]

    if monitor is not None:
        for k, (d, rate) in enumerate(points, start=1):
            monitor.write(k, training_duration_us=d, false_alarm_rate=rate)

    curve = FalseAlarmCurve(points)
    logger.info("swept %d training durations, first zero at %s us", len(points), curve.first_zero_us())

    return curve

def write_curve(curve, path):
    """ two-column CSV: training_duration_us,false_alarm_rate """

    path = Path(path)
    data = np.array(curve.points, dtype=float).reshape(-1, 2)

    np.savetxt(path, data, fmt=("%d", "%.10g"), delimiter=",", header=CURVE_HEADER, comments="")

    logger.info("wrote %d curve points to %s", len(data), path)
