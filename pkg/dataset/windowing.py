"""Trimming and fixed-length windowing of recordings."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from dataset.recordings import Recording
from modules.augmentation import LabeledBatch, one_hot
from modules.errors import DatasetError
from modules.filters import Window

logger = logging.getLogger(__name__)

DEFAULT_TRIM_S = 5.0


@dataclass(frozen=True)
class WindowingSpec:
    frame: int = 256
    stride: int = 256
    trim_s: float = DEFAULT_TRIM_S

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if self.frame < 1:
            errors.append(f"frame must be >= 1, got {self.frame}")
        if self.stride < 1:
            errors.append(f"stride must be >= 1, got {self.stride}")
        if self.trim_s < 0:
            errors.append(f"trim_s must be >= 0, got {self.trim_s}")
        return len(errors) == 0, errors


def trim_samples(recording: Recording, trim_s: float) -> np.ndarray:
    """Drop round(trim_s * fs) samples from each end."""
    cut = int(math.floor(trim_s * recording.sample_rate_hz + 0.5))
    if 2 * cut >= recording.num_samples:
        return recording.samples[:0]
    return recording.samples[cut:recording.num_samples - cut]


def window_count(length: int, frame: int, stride: int) -> int:
    return 0 if length < frame else (length - frame) // stride + 1


def window_array(recording: Recording, frame: int, stride: int, trim_s: float) -> np.ndarray:
    """(m, frame, C) windows of the trimmed recording."""
    trimmed = trim_samples(recording, trim_s)
    count = window_count(trimmed.shape[0], frame, stride)
    if count == 0:
        return np.empty((0, frame, recording.num_channels))
    views = sliding_window_view(trimmed, frame, axis=0)[::stride]  # (m, C, frame)
    return np.ascontiguousarray(views[:count].transpose(0, 2, 1))


def window_recording(recording: Recording, frame: int, stride: int, trim_s: float) -> List[Window]:
    """Windows of ``frame`` samples every ``stride`` samples after trimming both ends."""
    spec = WindowingSpec(frame, stride, trim_s)
    is_valid, errors = spec.validate()
    if not is_valid:
        raise DatasetError("; ".join(errors))
    return [Window(w, recording.sample_rate_hz) for w in window_array(recording, frame, stride, trim_s)]


@dataclass
class LoadReport:
    """What windowing made of a set of recordings."""

    recordings: int = 0
    windows: int = 0
    excluded: List[str] = field(default_factory=list)
    windows_per_class: Dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'recordings': self.recordings,
            'windows': self.windows,
            'excluded_recordings': len(self.excluded),
            'excluded': list(self.excluded),
            'windows_per_class': {str(k): v for k, v in sorted(self.windows_per_class.items())},
        }


def build_batch(recordings: Sequence[Recording], spec: WindowingSpec,
                num_classes: int) -> Tuple[Optional[LabeledBatch], LoadReport]:
    """Window every recording into one batch with one-hot labels.

    Recordings that yield no window are left out and listed in the report.
    """
    report = LoadReport(recordings=len(recordings))
    windows, labels = [], []
    sample_rates = {r.sample_rate_hz for r in recordings}
    if len(sample_rates) > 1:
        raise DatasetError(f"Recordings mix sample rates {sorted(sample_rates)}; resampling is not supported")
    channels = {r.num_channels for r in recordings}
    if len(channels) > 1:
        raise DatasetError(f"Recordings mix channel counts {sorted(channels)}")

    for recording in recordings:
        if recording.label >= num_classes:
            raise DatasetError(f"Recording '{recording.name}' has label {recording.label} "
                               f"outside the {num_classes}-class vocabulary")
        frames = window_array(recording, spec.frame, spec.stride, spec.trim_s)
        if frames.shape[0] == 0:
            logger.warning(f"Excluding {recording.name or recording.subject_id}: "
                           f"{recording.num_samples} samples leave no {spec.frame}-sample window after trimming")
            report.excluded.append(recording.name or recording.subject_id)
            continue
        windows.append(frames)
        labels.append(one_hot(np.full(frames.shape[0], recording.label), num_classes))
        report.windows_per_class[recording.label] = report.windows_per_class.get(recording.label, 0) + frames.shape[0]

    if not windows:
        return None, report
    batch = LabeledBatch(np.concatenate(windows), np.concatenate(labels), sample_rates.pop())
    report.windows = len(batch)
    return batch, report
