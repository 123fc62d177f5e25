import numpy as np
import pytest

from dataset.recordings import Recording, subjects_of
from dataset.splits import SplitSpec, split_by_subject
from modules.errors import InsufficientSubjectsError


@pytest.fixture
def recordings():
    return [Recording(f"s{i:03d}", label, np.zeros((10, 3)), 100.0, f"s{i:03d}_{label}")
            for i in range(120) for label in range(2)]


def test_groups_are_disjoint_and_sized(recordings):
    split = split_by_subject(recordings, SplitSpec(10, 50, 50), np.random.default_rng(0))
    train, valid, test = set(split.train_subjects), set(split.valid_subjects), set(split.test_subjects)
    assert (len(train), len(valid), len(test)) == (10, 50, 50)
    assert not train & valid and not train & test and not valid & test
    assert len(split.train) == 20
    assert subjects_of(split.test) == split.test_subjects
    assert all(r.subject_id in valid for r in split.valid)


def test_split_is_reproducible(recordings):
    first = split_by_subject(recordings, SplitSpec(10, 5, 5), np.random.default_rng(3))
    second = split_by_subject(recordings, SplitSpec(10, 5, 5), np.random.default_rng(3))
    assert first.train_subjects == second.train_subjects
    assert first.test_subjects == second.test_subjects
    other = split_by_subject(recordings, SplitSpec(10, 5, 5), np.random.default_rng(4))
    assert other.train_subjects != first.train_subjects


def test_validation_group_may_be_empty(recordings):
    split = split_by_subject(recordings, SplitSpec(3, 0, 2), np.random.default_rng(0))
    assert split.valid == [] and split.valid_subjects == []


def test_not_enough_subjects(recordings):
    with pytest.raises(InsufficientSubjectsError, match="only 120"):
        split_by_subject(recordings, SplitSpec(100, 10, 11), np.random.default_rng(0))
    with pytest.raises(InsufficientSubjectsError):
        split_by_subject(recordings, SplitSpec(0, 1, 1), np.random.default_rng(0))
