import logging

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from src.codec import Label, MessageId, message_id_of, with_prediction
from src.cycles import MessageClass
from src.markov import map_to_state, score_transition

logger = logging.getLogger(__name__)

@dataclass
class ModelCursor:
    """
    Position of a detection stream in one model.

    States are kept as tuples of candidates: a periodic message seen for
    the first time or off its cycles could be in any of its cycles, an
    unknown one is in none.
    """

    last_states: Optional[Tuple] = None
    last_label: Optional[Label] = None
    last_benign_states: Optional[Tuple] = None

    def push(self, states, label):

        self.last_states = states
        self.last_label = label

        if label is Label.BENIGN:
            self.last_benign_states = states

@dataclass
class DetectorState:
    """ per-stream detection context, never shared between streams """

    periodic: ModelCursor = field(default_factory=ModelCursor)
    aperiodic: ModelCursor = field(default_factory=ModelCursor)
    last_benign_us: Dict[MessageId, int] = field(default_factory=dict)
    last_seen_us: Dict[MessageId, int] = field(default_factory=dict)

def _score(model, from_states, to_states):
    return max((score_transition(model, a, b) for a in from_states for b in to_states), default=0.)

def _judge(model, cursor, states):

    if cursor.last_benign_states is None:
        return Label.BENIGN # nothing benign to come from yet

    if not states or model.threshold is None:
        return Label.ANOMALY

    if _score(model, cursor.last_states, states) >= model.threshold:
        return Label.BENIGN

    # point anomaly recovery
    if cursor.last_label is Label.ANOMALY and _score(model, cursor.last_benign_states, states) >= model.threshold:
        return Label.BENIGN

    return Label.ANOMALY

def detect(record, detector_state, model_pair):
    """ label one record and advance `detector_state` """

    m = message_id_of(record)
    kind = model_pair.classification.get(m)

    if kind is None:
        label = Label.ANOMALY
        detector_state.aperiodic.push((), label)

    elif kind is MessageClass.PERIODIC:

        previous_us = detector_state.last_benign_us.get(m)

        if previous_us is None:
            states, label = model_pair.periodic_states_of(m), Label.BENIGN

        else:
            s = map_to_state(record, previous_us, model_pair)

            # a late or missing instance leaves the benign anchor behind, resynchronise on the last one seen
            seen_us = detector_state.last_seen_us.get(m, previous_us)
            if s is None and seen_us != previous_us:
                s = map_to_state(record, seen_us, model_pair)

            if s is None:
                # off-cycle, its cycles stay the ordering context of the next record
                states, label = model_pair.periodic_states_of(m), Label.ANOMALY
            else:
                states = (s,)
                label = _judge(model_pair.periodic, detector_state.periodic, states)

        detector_state.periodic.push(states, label)
        detector_state.aperiodic.push((m,), label)

    else:
        states = (m,)
        label = _judge(model_pair.aperiodic, detector_state.aperiodic, states)
        detector_state.aperiodic.push(states, label)

    detector_state.last_seen_us[m] = record.timestamp_us
    if label is Label.BENIGN:
        detector_state.last_benign_us[m] = record.timestamp_us

    return label

def detect_log(records, model_pair):
    """ copy of `records` with `predicted_label` set, fresh stream state """

    state = DetectorState()
    labeled = [with_prediction(r, detect(r, state, model_pair)) for r in records]

    logger.info("flagged %d of %d records", sum(r.predicted_label is Label.ANOMALY for r in labeled), len(labeled))

    return labeled
