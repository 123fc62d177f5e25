"""Raw sensor recordings."""

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from modules.errors import DatasetError


@dataclass(frozen=True)
class Recording:
    """One measurement file: a (L, C) sample matrix from one subject doing one activity."""

    subject_id: str
    label: int
    samples: np.ndarray
    sample_rate_hz: float
    name: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise DatasetError(f"Recording '{self.name}' must hold an (L, C) matrix with L, C >= 1, "
                               f"got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise DatasetError(f"Recording '{self.name}' contains non-finite samples")
        if not self.sample_rate_hz > 0:
            raise DatasetError(f"Recording '{self.name}' has non-positive sample rate {self.sample_rate_hz}")
        if self.label < 0:
            raise DatasetError(f"Recording '{self.name}' has negative label {self.label}")
        object.__setattr__(self, 'samples', samples)

    @property
    def num_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def num_channels(self) -> int:
        return int(self.samples.shape[1])

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate_hz


def subjects_of(recordings: Sequence[Recording]) -> List[str]:
    """Distinct subject ids in sorted order."""
    return sorted({r.subject_id for r in recordings})


def group_by_subject(recordings: Sequence[Recording]) -> Dict[str, List[Recording]]:
    groups: Dict[str, List[Recording]] = {}
    for recording in recordings:
        groups.setdefault(recording.subject_id, []).append(recording)
    return groups
