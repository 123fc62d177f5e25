import numpy as np
import pytest

from dataset.recordings import Recording
from dataset.windowing import WindowingSpec, build_batch, trim_samples, window_count, window_recording
from modules.errors import DatasetError

FS = 100.0


def recording(length, label=0, channels=3, subject='s1', name='rec'):
    samples = np.arange(length * channels, dtype=np.float64).reshape(length, channels)
    return Recording(subject, label, samples, FS, name)


def test_trimmed_recording_yields_seven_windows():
    rec = recording(3000)
    windows = window_recording(rec, frame=256, stride=256, trim_s=5.0)
    assert len(windows) == 7
    np.testing.assert_array_equal(windows[0].samples, rec.samples[500:756])
    np.testing.assert_array_equal(windows[-1].samples, rec.samples[500 + 6 * 256:500 + 7 * 256])


def test_overlapping_stride():
    windows = window_recording(recording(100), frame=20, stride=10, trim_s=0.0)
    assert len(windows) == window_count(100, 20, 10) == 9
    np.testing.assert_array_equal(windows[1].samples[:10], windows[0].samples[10:])


def test_trimming_everything_leaves_nothing():
    assert trim_samples(recording(1000), 5.0).shape == (0, 3)
    assert window_recording(recording(1000), 256, 256, 5.0) == []


def test_invalid_windowing():
    assert not WindowingSpec(frame=0).validate()[0]
    with pytest.raises(DatasetError):
        window_recording(recording(100), frame=10, stride=0, trim_s=0.0)


def test_short_recordings_are_excluded_from_the_batch():
    recordings = [recording(3000, label=0, name='long'), recording(1100, label=1, name='short'),
                  recording(2000, label=2, name='medium')]
    batch, report = build_batch(recordings, WindowingSpec(256, 256, 5.0), num_classes=3)
    assert report.excluded == ['short']
    assert report.windows == len(batch) == 7 + 3
    assert report.windows_per_class == {0: 7, 2: 3}
    np.testing.assert_array_equal(batch.labels.sum(axis=0), [7, 0, 3])
    assert batch.windows.shape == (10, 256, 3)
    assert report.to_dict()['excluded_recordings'] == 1


def test_batch_is_none_when_nothing_survives():
    batch, report = build_batch([recording(100)], WindowingSpec(256, 256, 0.0), num_classes=2)
    assert batch is None and report.excluded == ['rec']


def test_labels_and_rates_must_be_consistent():
    with pytest.raises(DatasetError):
        build_batch([recording(300, label=3)], WindowingSpec(256, 256, 0.0), num_classes=3)
    other_rate = Recording('s2', 0, np.zeros((300, 3)), 50.0)
    with pytest.raises(DatasetError):
        build_batch([recording(300), other_rate], WindowingSpec(256, 256, 0.0), num_classes=2)
