"""Classification metrics: confusion matrix, accuracy, macro F1, trial aggregation."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix as sk_confusion_matrix

from modules.errors import UndefinedMetricError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts, rows = true class, columns = predicted class."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise UndefinedMetricError(f"Confusion matrix must be square, got shape {counts.shape}")
        if np.any(counts < 0) or not np.all(np.equal(np.mod(counts, 1), 0)):
            raise UndefinedMetricError("Confusion matrix entries must be nonnegative integers")
        object.__setattr__(self, 'counts', counts.astype(np.int64))

    @classmethod
    def from_predictions(cls, true_ids: Sequence[int], predicted_ids: Sequence[int],
                         num_classes: int) -> 'ConfusionMatrix':
        counts = sk_confusion_matrix(np.asarray(true_ids), np.asarray(predicted_ids),
                                     labels=list(range(num_classes)))
        return cls(counts)

    @property
    def num_classes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_list(self) -> List[List[int]]:
        return self.counts.tolist()


def _require_nonempty(cm: ConfusionMatrix):
    if cm.total == 0:
        raise UndefinedMetricError("Metric is undefined for an empty confusion matrix")


def accuracy(cm: ConfusionMatrix) -> float:
    _require_nonempty(cm)
    return float(np.trace(cm.counts) / cm.total)


def per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    """F1 per class; 0 where precision and recall are both undefined or zero."""
    counts = cm.counts.astype(np.float64)
    true_positive = np.diag(counts)
    predicted = counts.sum(axis=0)
    actual = counts.sum(axis=1)
    denominator = predicted + actual
    # 2PR / (P + R) simplifies to 2TP / (predicted + actual)
    return np.divide(2.0 * true_positive, denominator,
                     out=np.zeros_like(true_positive), where=denominator > 0)


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of the per-class F1 scores."""
    _require_nonempty(cm)
    return float(per_class_f1(cm).mean())


@dataclass
class TrialReport:
    trial_id: int
    split: str
    accuracy: float
    macro_f1: float
    confusion: ConfusionMatrix
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ('accuracy', 'macro_f1'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise UndefinedMetricError(f"{name} must lie in [0, 1], got {value}")

    @classmethod
    def from_confusion(cls, trial_id: int, split: str, cm: ConfusionMatrix,
                       metadata: Optional[Dict] = None) -> 'TrialReport':
        return cls(trial_id, split, accuracy(cm), macro_f1(cm), cm, dict(metadata or {}))

    def to_dict(self) -> Dict:
        return {
            'trial_id': self.trial_id,
            'split': self.split,
            'accuracy': self.accuracy,
            'macro_f1': self.macro_f1,
            'confusion': self.confusion.to_list(),
            **({'metadata': self.metadata} if self.metadata else {}),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'TrialReport':
        return cls(
            trial_id=int(data['trial_id']),
            split=str(data['split']),
            accuracy=float(data['accuracy']),
            macro_f1=float(data['macro_f1']),
            confusion=ConfusionMatrix(np.asarray(data['confusion'])),
            metadata=dict(data.get('metadata', {})),
        )


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    count: int

    def format(self, scale: float = 100.0, digits: int = 1) -> str:
        """``mean(±std)``, by default in percent with one decimal."""
        return f"{self.mean * scale:.{digits}f}(±{self.std * scale:.{digits}f})"


def summarize(values: Iterable[float]) -> MetricSummary:
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise UndefinedMetricError("Cannot aggregate an empty set of trials")
    # sorted so the result does not depend on trial order
    values = np.sort(values)
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return MetricSummary(mean=float(values.mean()), std=std, count=int(values.size))


def aggregate_trials(reports: Sequence[TrialReport]) -> Dict[str, MetricSummary]:
    """Mean and sample standard deviation of accuracy and macro F1."""
    reports = list(reports)
    if not reports:
        raise UndefinedMetricError("Cannot aggregate an empty set of trials")
    return {
        'accuracy': summarize(r.accuracy for r in reports),
        'macro_f1': summarize(r.macro_f1 for r in reports),
    }


def evaluate_predictions(true_ids, predicted_ids, num_classes: int, trial_id: int, split: str,
                         metadata: Optional[Dict] = None) -> TrialReport:
    cm = ConfusionMatrix.from_predictions(true_ids, predicted_ids, num_classes)
    return TrialReport.from_confusion(trial_id, split, cm, metadata)
