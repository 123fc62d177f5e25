"""Synthetic HAR-like corpus: per-class periodic signatures with subject variation."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from dataset.recordings import Recording
from modules.errors import DatasetError
from utils.seeding import STREAM_SYNTH, derive_rng

logger = logging.getLogger(__name__)

CHANNEL_GAINS = (1.0, 0.6, 0.3)
CHANNEL_PHASES = (0.0, np.pi / 6, np.pi / 3)


@dataclass(frozen=True)
class SynthSpec:
    num_classes: int = 3
    subjects: int = 30
    recordings_per_subject: int = 1
    duration_s: float = 30.0
    sample_rate_hz: float = 100.0
    base_freqs_hz: Optional[Tuple[float, ...]] = None
    amplitudes: Optional[Tuple[float, ...]] = None
    harmonic_weights: Optional[Tuple[float, ...]] = None
    noise_level: float = 0.05
    gain_jitter: float = 0.1
    phase_jitter: float = np.pi
    seed: int = 0

    def __post_init__(self):
        k = self.num_classes
        if self.base_freqs_hz is None and k >= 1:
            step = min(1.5, (0.2 * self.sample_rate_hz - 1.0) / max(k - 1, 1))
            object.__setattr__(self, 'base_freqs_hz', tuple(1.0 + i * step for i in range(k)))
        if self.amplitudes is None:
            object.__setattr__(self, 'amplitudes', tuple(1.0 + 0.25 * i for i in range(k)))
        if self.harmonic_weights is None:
            object.__setattr__(self, 'harmonic_weights', tuple(0.3 for _ in range(k)))
        for name in ('base_freqs_hz', 'amplitudes', 'harmonic_weights'):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @property
    def num_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if self.num_classes < 2:
            errors.append(f"num_classes must be >= 2, got {self.num_classes}")
        if self.subjects < 1:
            errors.append(f"subjects must be >= 1, got {self.subjects}")
        if self.recordings_per_subject < 1:
            errors.append(f"recordings_per_subject must be >= 1, got {self.recordings_per_subject}")
        if not self.sample_rate_hz > 0:
            errors.append(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not self.duration_s > 0 or self.num_samples < 1:
            errors.append(f"duration_s must give at least one sample, got {self.duration_s}")
        for name in ('base_freqs_hz', 'amplitudes', 'harmonic_weights'):
            values = getattr(self, name)
            if len(values) != self.num_classes:
                errors.append(f"{name} needs {self.num_classes} entries, got {len(values)}")
        if any(f <= 0 for f in self.base_freqs_hz) or any(a <= 0 for a in self.amplitudes):
            errors.append("base frequencies and amplitudes must be positive")
        if any(w < 0 for w in self.harmonic_weights):
            errors.append("harmonic weights must be nonnegative")
        if len(set(self.base_freqs_hz)) != len(self.base_freqs_hz):
            errors.append(f"class base frequencies must be distinct, got {list(self.base_freqs_hz)}")
        if self.base_freqs_hz and max(self.base_freqs_hz) >= self.sample_rate_hz / 2:
            errors.append("class base frequencies must lie below the Nyquist frequency")
        if self.noise_level < 0 or self.gain_jitter < 0 or self.phase_jitter < 0:
            errors.append("noise_level, gain_jitter and phase_jitter must be nonnegative")
        if self.gain_jitter >= 1:
            errors.append(f"gain_jitter must be < 1 so gains stay positive, got {self.gain_jitter}")
        return len(errors) == 0, errors


def subject_name(index: int) -> str:
    return f"subject{index:03d}"


def _symmetric(rng: np.random.Generator, half_width: float) -> float:
    return half_width * (2.0 * rng.random() - 1.0)


def class_signature(spec: SynthSpec, label: int, gain: float, phase: float, t: np.ndarray) -> np.ndarray:
    """(L, 3) noiseless signal for one class."""
    freq = spec.base_freqs_hz[label]
    amp = spec.amplitudes[label] * gain
    harmonic = spec.harmonic_weights[label]
    channels = []
    for channel_gain, channel_phase in zip(CHANNEL_GAINS, CHANNEL_PHASES):
        angle = 2.0 * np.pi * freq * t + phase + channel_phase
        channels.append(channel_gain * amp * (np.sin(angle) + harmonic * np.sin(2.0 * angle)))
    return np.stack(channels, axis=1)


def generate_synthetic(spec: SynthSpec) -> List[Recording]:
    """Deterministic corpus: subjects x classes x recordings_per_subject recordings."""
    is_valid, errors = spec.validate()
    if not is_valid:
        raise DatasetError("Invalid synthetic corpus spec: " + "; ".join(errors))

    t = np.arange(spec.num_samples) / spec.sample_rate_hz
    recordings = []
    for s in range(spec.subjects):
        subject_rng = derive_rng(spec.seed, STREAM_SYNTH, s)
        gain = 1.0 + _symmetric(subject_rng, spec.gain_jitter)
        for label in range(spec.num_classes):
            for r in range(spec.recordings_per_subject):
                rng = derive_rng(spec.seed, STREAM_SYNTH, s, label + 1, r)
                phase = _symmetric(rng, spec.phase_jitter)
                samples = class_signature(spec, label, gain, phase, t)
                if spec.noise_level > 0:
                    samples = samples + spec.noise_level * rng.standard_normal(samples.shape)
                name = f"{subject_name(s)}_c{label}_r{r}"
                recordings.append(Recording(subject_name(s), label, samples, spec.sample_rate_hz, name))
    logger.info(f"Generated {len(recordings)} synthetic recordings "
                f"({spec.subjects} subjects, {spec.num_classes} classes)")
    return recordings
