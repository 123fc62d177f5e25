"""Subject-based hold-out splits."""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from dataset.recordings import Recording, subjects_of
from modules.errors import InsufficientSubjectsError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitSpec:
    n_train_subjects: int
    n_valid_subjects: int
    n_test_subjects: int
    seed: int = 0

    @property
    def total(self) -> int:
        return self.n_train_subjects + self.n_valid_subjects + self.n_test_subjects

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if self.n_train_subjects < 1:
            errors.append(f"n_train_subjects must be >= 1, got {self.n_train_subjects}")
        if self.n_valid_subjects < 0:
            errors.append(f"n_valid_subjects must be >= 0, got {self.n_valid_subjects}")
        if self.n_test_subjects < 1:
            errors.append(f"n_test_subjects must be >= 1, got {self.n_test_subjects}")
        return len(errors) == 0, errors


@dataclass
class SubjectSplit:
    train: List[Recording]
    valid: List[Recording]
    test: List[Recording]
    train_subjects: List[str]
    valid_subjects: List[str]
    test_subjects: List[str]


def split_by_subject(recordings: Sequence[Recording], spec: SplitSpec,
                     rng: np.random.Generator) -> SubjectSplit:
    """Sample disjoint train/valid/test subject groups without replacement."""
    is_valid, errors = spec.validate()
    if not is_valid:
        raise InsufficientSubjectsError("; ".join(errors))
    subjects = subjects_of(recordings)
    if len(subjects) < spec.total:
        raise InsufficientSubjectsError(
            f"Split needs {spec.n_train_subjects} train + {spec.n_valid_subjects} valid + "
            f"{spec.n_test_subjects} test = {spec.total} subjects, but only {len(subjects)} are available"
        )

    chosen = [subjects[i] for i in rng.permutation(len(subjects))[:spec.total]]
    train_ids = sorted(chosen[:spec.n_train_subjects])
    valid_ids = sorted(chosen[spec.n_train_subjects:spec.n_train_subjects + spec.n_valid_subjects])
    test_ids = sorted(chosen[spec.n_train_subjects + spec.n_valid_subjects:])

    def members(ids: List[str]) -> List[Recording]:
        wanted = set(ids)
        return [r for r in recordings if r.subject_id in wanted]

    logger.debug(f"Subject split: train={train_ids} valid={valid_ids} test={test_ids}")
    return SubjectSplit(members(train_ids), members(valid_ids), members(test_ids),
                        train_ids, valid_ids, test_ids)
