"""Shared fixtures: small batches, tiny models and a tiny synthetic corpus."""

import numpy as np
import pytest

from config.settings import settings
from dataset.synthetic import SynthSpec, generate_synthetic
from modules.augmentation import LabeledBatch, augmentation_counter, one_hot
from modules.network import ModelConfig

FS = 100.0


def make_batch(n: int = 8, length: int = 64, channels: int = 3, num_classes: int = 3,
               seed: int = 0, fs: float = FS) -> LabeledBatch:
    rng = np.random.default_rng(seed)
    windows = rng.standard_normal((n, length, channels))
    labels = one_hot(np.arange(n) % num_classes, num_classes)
    return LabeledBatch(windows, labels, fs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def batch():
    return make_batch()


@pytest.fixture
def tiny_model_config():
    return ModelConfig(num_classes=3, channel_widths=(4, 8), kernel_size=3, input_channels=3)


@pytest.fixture
def tiny_synth_spec():
    return SynthSpec(num_classes=3, subjects=6, recordings_per_subject=1, duration_s=2.0,
                     sample_rate_hz=FS, seed=7)


@pytest.fixture
def tiny_corpus(tiny_synth_spec):
    return generate_synthetic(tiny_synth_spec)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep OCTMIX_* variables from the developer's shell out of the tests."""
    for name in ('OCTMIX_OUTPUT_DIR', 'OCTMIX_LOG_LEVEL', 'OCTMIX_WORKERS'):
        monkeypatch.delenv(name, raising=False)
    settings.reload()
    augmentation_counter.reset()
    yield
    settings.reload()
