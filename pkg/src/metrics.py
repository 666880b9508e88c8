import logging

from dataclasses import dataclass

from sklearn.metrics import confusion_matrix

from src.codec import Label

logger = logging.getLogger(__name__)

class AlignmentError(ValueError):
    pass

def _ratio(num, den):
    return num / den if den else 1.

@dataclass(frozen=True)
class ClassMetrics:
    """ one-vs-rest confusion counts of `label`, 0/0 ratios are 1 """

    label: Label
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int

    @property
    def precision(self):
        return _ratio(self.true_positives, self.true_positives + self.false_positives)

    @property
    def recall(self):
        return _ratio(self.true_positives, self.true_positives + self.false_negatives)

    @property
    def total(self):
        return self.true_positives + self.false_positives + self.false_negatives + self.true_negatives

    def swapped(self, label):
        """ same confusion seen with the other class as positive """
        return ClassMetrics(label, self.true_negatives, self.false_negatives, self.false_positives, self.true_positives)

def prediction_of(record):
    """ detector verdict, a plain log predicts its own truth """
    return record.predicted_label if record.predicted_label is not None else record.truth_label

def evaluate(predicted_log, truth_log):
    """ (metrics of the Anomaly class, metrics of the Benign class) """

    predicted_log, truth_log = list(predicted_log), list(truth_log)

    if len(predicted_log) != len(truth_log):
        raise AlignmentError(f"{len(predicted_log)} predicted records for {len(truth_log)} truth records")

    for i, (p, t) in enumerate(zip(predicted_log, truth_log)):

        if p.timestamp_us != t.timestamp_us:
            raise AlignmentError(f"record {i}: predicted timestamp {p.timestamp_us} us, truth {t.timestamp_us} us")

        if t.truth_label is Label.UNLABELED:
            raise AlignmentError(f"record {i} at {t.timestamp_us} us has no truth label")

    labels = [Label.ANOMALY.value, Label.BENIGN.value]

    y_true = [t.truth_label.value for t in truth_log]
    y_pred = [prediction_of(p).value for p in predicted_log]

    if not y_true:
        anomaly = ClassMetrics(Label.ANOMALY, 0, 0, 0, 0)

    else:
        # rows: truth, columns: prediction, anomaly first
        (tp, fn), (fp, tn) = confusion_matrix(y_true, y_pred, labels=labels)
        anomaly = ClassMetrics(Label.ANOMALY, int(tp), int(fp), int(fn), int(tn))

    logger.debug("confusion (tp, fp, fn, tn) = %s", (anomaly.true_positives, anomaly.false_positives, anomaly.false_negatives, anomaly.true_negatives))

    return anomaly, anomaly.swapped(Label.BENIGN)

def false_alarm_rate(anomaly_metrics):
    """ FP / (FP + TN), 0 when there is no benign record """

    negatives = anomaly_metrics.false_positives + anomaly_metrics.true_negatives

    return anomaly_metrics.false_positives / negatives if negatives else 0.

def format_report(anomaly, benign, title=None):

    lines = [] if title is None else [title]

    lines.append(f"{'class':<10}{'precision':>12}{'recall':>10}{'TP':>9}{'FP':>9}{'FN':>9}{'TN':>9}")

    for m in (anomaly, benign):
        lines.append(
            f"{m.label.value:<10}{m.precision:>12.4f}{m.recall:>10.4f}"
            f"{m.true_positives:>9d}{m.false_positives:>9d}{m.false_negatives:>9d}{m.true_negatives:>9d}"
        )

    lines.append(f"false alarm rate: {false_alarm_rate(anomaly):.6f} over {anomaly.false_positives + anomaly.true_negatives} benign records")

    return "\n".join(lines)

def is_perfect(anomaly, benign):
    return all(v == 1. for v in (anomaly.precision, anomaly.recall, benign.precision, benign.recall))
