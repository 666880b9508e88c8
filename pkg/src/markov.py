"""
Dual Markov chain model of bus traffic.

Periodic messages are modelled by (message id, time cycle) states, aperiodic
ones by their message id alone. Each model keeps its exact occurrence and
transition counts next to the float probabilities derived from them, and an
anomaly threshold equal to the smallest score of a pair of consecutive
training messages.
"""
import json
import logging

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

from src.codec import MessageId, check_sorted, message_id_of
from src.cycles import (DEFAULT_MAX_CYCLES, DEFAULT_RARE_COUNT, DEFAULT_TOLERANCE_US, CycleSet,
                        MessageClass, classify_message, extract_cycle_sets)

logger = logging.getLogger(__name__)

MODEL_FORMAT = "milbus-ids-model"
MODEL_VERSION = 1

class TrainingError(ValueError):
    pass

class ModelFormatError(ValueError):
    pass

class ModelKind(str, Enum):
    PERIODIC = "Periodic"
    APERIODIC = "Aperiodic"

@dataclass(frozen=True)
class PeriodicState:

    message_id: MessageId
    cycle_us: float

    def sort_key(self):
        return self.message_id.sort_key() + (self.cycle_us,)

State = Union[PeriodicState, MessageId]

@dataclass(frozen=True)
class TrainingParams:

    tolerance_us: int = DEFAULT_TOLERANCE_US
    rare_count_threshold: int = DEFAULT_RARE_COUNT
    max_cycles_threshold: int = DEFAULT_MAX_CYCLES

    def __post_init__(self):

        if self.tolerance_us <= 0:
            raise TrainingError("tolerance_us must be positive")

        if self.rare_count_threshold < 1 or self.max_cycles_threshold < 1:
            raise TrainingError("rare_count_threshold and max_cycles_threshold must be at least 1")

# ----------------------------------------------------------------------- MARKOV MODEL

@dataclass(frozen=True)
class MarkovModel:
    """
    :param state_counts: occur_j, number of training messages in state j
    :param transition_counts: trans_jl, number of j -> l successions
    :param training_size: |TS|, the number of records in the whole training log
    """

    kind: ModelKind
    training_size: int
    state_counts: Mapping[State, int]
    transition_counts: Mapping[Tuple[State, State], int]
    state_prob: Mapping[State, float] = field(default_factory=dict)
    trans_prob: Mapping[Tuple[State, State], float] = field(default_factory=dict)
    threshold: Optional[float] = None

    @classmethod
    def from_counts(cls, kind, state_counts, transition_counts, training_size):

        outgoing = Counter()
        for (a, _), n in transition_counts.items():
            outgoing[a] += n

        state_prob = {s: n / training_size for s, n in state_counts.items()}
        trans_prob = {(a, b): n / outgoing[a] for (a, b), n in transition_counts.items()}

        model = cls(ModelKind(kind), training_size, dict(state_counts), dict(transition_counts), state_prob, trans_prob)

        scores = [score_transition(model, a, b) for a, b in transition_counts]
        object.__setattr__(model, "threshold", min(scores) if scores else None)

        return model

    @property
    def states(self):
        return frozenset(self.state_counts)

    def state_fraction(self, state):
        return Fraction(self.state_counts.get(state, 0), self.training_size)

    def trans_fraction(self, a, b):

        outgoing = sum(n for (s, _), n in self.transition_counts.items() if s == a)
        if not outgoing:
            return Fraction(0)

        return Fraction(self.transition_counts.get((a, b), 0), outgoing)

def score_transition(model, from_state, to_state):
    """ stateProb(from) * transProb(from -> to), 0 for unseen pairs """

    return model.state_prob.get(from_state, 0.) * model.trans_prob.get((from_state, to_state), 0.)

@dataclass(frozen=True)
class ModelPair:

    periodic: MarkovModel
    aperiodic: MarkovModel
    cycle_sets: Mapping[MessageId, CycleSet]
    classification: Mapping[MessageId, MessageClass]
    params: TrainingParams = TrainingParams()

    def periodic_states_of(self, message_id):
        return tuple(PeriodicState(message_id, c) for c in self.cycle_sets[message_id].cycles_us)

# ----------------------------------------------------------------------- TRAINING

def _count(sequence):

    return Counter(sequence), Counter(zip(sequence, sequence[1:]))

def _periodic_corpus(records, cycle_sets, classification, tolerance_us):
    """ periodic states in log order, aperiodic messages dropped """

    timestamps = {}
    for r in records:
        timestamps.setdefault(message_id_of(r), []).append(r.timestamp_us)

    position = Counter()
    sequence = []

    for r in records:

        m = message_id_of(r)
        if classification[m] is not MessageClass.PERIODIC:
            continue

        ts, i = timestamps[m], position[m]
        position[m] += 1

        # the first instance has no predecessor and takes the cycle of its successor
        delta = ts[i] - ts[i - 1] if i else ts[1] - ts[0]

        k = cycle_sets[m].match(delta, tolerance_us)
        sequence.append(PeriodicState(m, cycle_sets[m].cycles_us[k]))

    return sequence

def _aperiodic_corpus(records):
    """ every message of the log projected on its id """

    return [message_id_of(r) for r in records]

def train(records, params=TrainingParams()):
    """ cycle extraction, classification and both Markov models from a benign log """

    records = list(records)
    if not records:
        raise TrainingError("cannot train on an empty log")

    check_sorted(records)

    cycle_sets = extract_cycle_sets(records, params.tolerance_us)
    classification = {m: classify_message(cs, params.rare_count_threshold, params.max_cycles_threshold) for m, cs in cycle_sets.items()}

    n = len(records)

    periodic = MarkovModel.from_counts(ModelKind.PERIODIC, *_count(_periodic_corpus(records, cycle_sets, classification, params.tolerance_us)), n)
    aperiodic = MarkovModel.from_counts(ModelKind.APERIODIC, *_count(_aperiodic_corpus(records)), n)

    logger.info(
        "trained on %d records: %d periodic ids (%d states), %d aperiodic ids, thresholds %s / %s",
        n,
        sum(c is MessageClass.PERIODIC for c in classification.values()),
        len(periodic.states),
        sum(c is MessageClass.APERIODIC for c in classification.values()),
        periodic.threshold, aperiodic.threshold,
    )

    return ModelPair(periodic, aperiodic, cycle_sets, classification, params)

def map_to_state(record, predecessor_timestamp_us, model_pair):
    """
    State of `record` in the model its message id belongs to.

    Periodic ids need the timestamp of the previous instance of the same id
    and the resulting delta must fall in one of the id's cycles. Returns None
    for unknown ids and unmatched deltas.
    """

    m = message_id_of(record)
    kind = model_pair.classification.get(m)

    if kind is None:
        return None

    if kind is MessageClass.APERIODIC:
        return m

    if predecessor_timestamp_us is None:
        return None

    cycle_set = model_pair.cycle_sets[m]
    k = cycle_set.match(record.timestamp_us - predecessor_timestamp_us, model_pair.params.tolerance_us)

    return None if k is None else PeriodicState(m, cycle_set.cycles_us[k])

# ----------------------------------------------------------------------- MODEL FILES

def _state_to_dict(state):

    if isinstance(state, PeriodicState):
        return {"message": state.message_id.to_dict(), "cycle_us": repr(state.cycle_us)}

    return {"message": state.to_dict()}

def _state_from_dict(data, kind):

    m = MessageId.from_dict(data["message"])

    if kind is ModelKind.PERIODIC:
        return PeriodicState(m, float(data["cycle_us"]))

    return m

def _model_to_dict(model):

    states = sorted(model.state_counts, key=lambda s: s.sort_key())
    index = {s: i for i, s in enumerate(states)}

    transitions = sorted(model.transition_counts, key=lambda t: (index[t[0]], index[t[1]]))

    return {
        "kind": model.kind.value,
        "training_size": model.training_size,
        "threshold": None if model.threshold is None else repr(model.threshold),
        "states": [dict(state=_state_to_dict(s), count=model.state_counts[s], prob=repr(model.state_prob[s])) for s in states],
        "transitions": [
            {"from": index[a], "to": index[b], "count": model.transition_counts[a, b], "prob": repr(model.trans_prob[a, b])}
            for a, b in transitions
        ],
    }

def _model_from_dict(data, kind):

    if ModelKind(data["kind"]) is not kind:
        raise ModelFormatError(f"expected a {kind.value} model, found {data['kind']}")

    states = [_state_from_dict(s["state"], kind) for s in data["states"]]

    state_counts = {s: int(d["count"]) for s, d in zip(states, data["states"])}
    state_prob = {s: float(d["prob"]) for s, d in zip(states, data["states"])}

    transition_counts, trans_prob = {}, {}
    for t in data["transitions"]:
        key = (states[t["from"]], states[t["to"]])
        transition_counts[key] = int(t["count"])
        trans_prob[key] = float(t["prob"])

    threshold = None if data["threshold"] is None else float(data["threshold"])

    return MarkovModel(kind, int(data["training_size"]), state_counts, transition_counts, state_prob, trans_prob, threshold)

def save_model(model_pair, path):

    ids = sorted(model_pair.cycle_sets, key=lambda m: m.sort_key())

    data = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "params": {
            "tolerance_us": model_pair.params.tolerance_us,
            "rare_count_threshold": model_pair.params.rare_count_threshold,
            "max_cycles_threshold": model_pair.params.max_cycles_threshold,
        },
        "cycle_sets": [
            {
                "message": m.to_dict(),
                "cycles_us": [repr(c) for c in model_pair.cycle_sets[m].cycles_us],
                "bounds_us": [list(b) for b in model_pair.cycle_sets[m].bounds_us],
                "occurrence_count": model_pair.cycle_sets[m].occurrence_count,
                "classification": model_pair.classification[m].value,
            }
            for m in ids
        ],
        "periodic": _model_to_dict(model_pair.periodic),
        "aperiodic": _model_to_dict(model_pair.aperiodic),
    }

    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=1)
        f.write("\n")

    logger.info("saved model to %s", path)

def load_model(path):

    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)

    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path} is not a model file: {e.msg} (line {e.lineno})")

    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path} is not a {MODEL_FORMAT} file")

    if data.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"{path}: model version {data.get('version')} is not supported (expected {MODEL_VERSION})")

    try:
        params = TrainingParams(**data["params"])

        cycle_sets: Dict[MessageId, CycleSet] = {}
        classification: Dict[MessageId, MessageClass] = {}

        for entry in data["cycle_sets"]:
            m = MessageId.from_dict(entry["message"])
            cycle_sets[m] = CycleSet(
                message_id=m,
                cycles_us=[float(c) for c in entry["cycles_us"]],
                occurrence_count=int(entry["occurrence_count"]),
                bounds_us=[(int(lo), int(hi)) for lo, hi in entry["bounds_us"]],
            )
            classification[m] = MessageClass(entry["classification"])

        periodic = _model_from_dict(data["periodic"], ModelKind.PERIODIC)
        aperiodic = _model_from_dict(data["aperiodic"], ModelKind.APERIODIC)

    except ModelFormatError:
        raise

    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise ModelFormatError(f"{path}: corrupt model file ({e!r})")

    logger.info("loaded model from %s (%d message ids)", path, len(cycle_sets))

    return ModelPair(periodic, aperiodic, cycle_sets, classification, params)
