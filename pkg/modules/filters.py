"""Complementary low-pass / high-pass decomposition of multi-channel windows."""

import logging
import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage, signal as sps

from modules.errors import FilterSpecError, OctmixError, WindowTooShortError

logger = logging.getLogger(__name__)

DEFAULT_TAPS_PER_HZ = 1.27


@dataclass(frozen=True)
class Window:
    """One fixed-length multi-channel frame, samples shaped (T, C)."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise OctmixError(f"Window samples must be a (T, C) matrix with T, C >= 1, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise OctmixError("Window samples must be finite")
        if not self.sample_rate_hz > 0:
            raise OctmixError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, 'samples', samples)

    @property
    def num_timesteps(self) -> int:
        return self.samples.shape[0]

    @property
    def num_channels(self) -> int:
        return self.samples.shape[1]


def default_num_taps(sample_rate_hz: float) -> int:
    """Odd tap count covering ~1.27 s of signal (127 taps at 100 Hz)."""
    taps = math.ceil(DEFAULT_TAPS_PER_HZ * sample_rate_hz)
    return taps if taps % 2 == 1 else taps + 1


@dataclass(frozen=True)
class FilterSpec:
    """Cutoff frequency in Hz plus the kernel length used to realize it."""

    cutoff_hz: float
    sample_rate_hz: float
    num_taps: Optional[int] = None

    def __post_init__(self):
        if self.num_taps is None:
            if self.sample_rate_hz > 0:
                object.__setattr__(self, 'num_taps', default_num_taps(self.sample_rate_hz))

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate_hz / 2.0

    @property
    def is_pass_through(self) -> bool:
        """Cutoff at or above Nyquist: LPF is the identity and HPF is zero."""
        return self.cutoff_hz >= self.nyquist_hz

    def validate(self) -> Tuple[bool, list]:
        """Check the filter parameters, returning (is_valid, errors)."""
        errors = []
        if not self.sample_rate_hz > 0:
            errors.append(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not self.cutoff_hz > 0:
            errors.append(f"cutoff_hz must be positive, got {self.cutoff_hz}")
        if self.num_taps is None or int(self.num_taps) != self.num_taps or self.num_taps < 1:
            errors.append(f"num_taps must be a positive integer, got {self.num_taps}")
        elif self.num_taps % 2 == 0:
            errors.append(f"num_taps must be odd for a linear-phase kernel, got {self.num_taps}")
        return len(errors) == 0, errors


@dataclass(frozen=True)
class FirKernel:
    """Symmetric low-pass taps with unit DC gain."""

    taps: np.ndarray = field(repr=False)

    @property
    def num_taps(self) -> int:
        return int(self.taps.shape[0])

    @property
    def is_identity(self) -> bool:
        center = self.num_taps // 2
        return self.taps[center] == 1.0 and np.count_nonzero(self.taps) == 1


def design_lowpass(spec: FilterSpec) -> FirKernel:
    """Hamming-windowed sinc low-pass kernel normalized to unit DC gain.

    A pass-through spec (cutoff at or above Nyquist) yields the unit impulse.
    """
    is_valid, errors = spec.validate()
    if not is_valid:
        raise FilterSpecError("; ".join(errors))

    num_taps = int(spec.num_taps)
    if spec.is_pass_through:
        taps = np.zeros(num_taps, dtype=np.float64)
        taps[num_taps // 2] = 1.0
        return FirKernel(taps=taps)

    taps = sps.firwin(num_taps, spec.cutoff_hz, window='hamming', fs=spec.sample_rate_hz, scale=False)
    taps = np.asarray(taps, dtype=np.float64)
    # symmetrize against rounding in firwin, then force sum(taps) == 1
    taps = 0.5 * (taps + taps[::-1])
    taps = taps / taps.sum()
    logger.debug(f"Designed {num_taps}-tap low-pass at {spec.cutoff_hz} Hz (fs={spec.sample_rate_hz} Hz)")
    return FirKernel(taps=taps)


@lru_cache(maxsize=128)
def cached_lowpass(spec: FilterSpec) -> FirKernel:
    """Memoized `design_lowpass`; kernels are treated as read-only."""
    return design_lowpass(spec)


def filter_array(samples: np.ndarray, kernel: FirKernel, axis: int = -2) -> np.ndarray:
    """Zero-phase convolution along ``axis`` with symmetric boundary reflection."""
    samples = np.asarray(samples, dtype=np.float64)
    length = samples.shape[axis]
    if kernel.num_taps > 2 * length:
        raise WindowTooShortError(
            f"Kernel of {kernel.num_taps} taps needs windows of at least "
            f"{(kernel.num_taps + 1) // 2} samples, got {length}"
        )
    if kernel.is_identity:
        return samples.copy()
    # ndimage 'reflect' mode is half-sample symmetric: (d c b a | a b c d | d c b a)
    return ndimage.correlate1d(samples, kernel.taps, axis=axis, mode='reflect')


def low_pass(x: Window, kernel: FirKernel) -> Window:
    """LPF(x): per-channel zero-phase filtering, same shape and sample rate."""
    return Window(filter_array(x.samples, kernel, axis=0), x.sample_rate_hz)


def high_pass(x: Window, kernel: FirKernel) -> Window:
    """HPF(x) = x - LPF(x), the literal residual of ``low_pass``."""
    return Window(x.samples - filter_array(x.samples, kernel, axis=0), x.sample_rate_hz)


def decompose(x: Window, spec: FilterSpec) -> Tuple[Window, Window]:
    """Split x into (low, high) with high = x - low; low + high matches x to one rounding per part."""
    kernel = design_lowpass(spec)
    low = filter_array(x.samples, kernel, axis=0)
    return Window(low, x.sample_rate_hz), Window(x.samples - low, x.sample_rate_hz)


def decompose_array(samples: np.ndarray, spec: FilterSpec, axis: int = -2) -> Tuple[np.ndarray, np.ndarray]:
    """Batch form of ``decompose`` for arrays shaped (..., T, C)."""
    kernel = cached_lowpass(spec)
    low = filter_array(samples, kernel, axis=axis)
    return low, samples - low


def frequency_response(kernel: FirKernel, sample_rate_hz: float, num_points: int = 512) -> Tuple[np.ndarray, np.ndarray]:
    """Magnitude response |H(f)| sampled at ``num_points`` frequencies in [0, fs/2)."""
    freqs, response = sps.freqz(kernel.taps, worN=num_points, fs=sample_rate_hz)
    return np.asarray(freqs, dtype=np.float64), np.abs(response).astype(np.float64)
