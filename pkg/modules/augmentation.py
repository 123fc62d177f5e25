"""Augmentation primitives: rotation, mixup, 1-D RICAP and Octave Mix.

All primitives take an explicit ``numpy.random.Generator`` and never touch
global random state. The synthetic primitives (mixup, RICAP, Octave Mix) draw
one shuffled pairing and then one mixing weight per mini-batch, in that order,
so that equal generator states give equal plans across primitives.
"""

import logging
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from modules.errors import AugmentationError, ChannelGroupingError, InvalidParameterError
from modules.filters import FilterSpec, Window, decompose_array

logger = logging.getLogger(__name__)

SIMPLEX_TOLERANCE = 1e-9


class AugmentationCounter:
    """Counts primitive invocations; used to audit clean-data phases."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counts: Counter = Counter()
        self._local = threading.local()

    def record(self, primitive: str):
        with self._lock:
            self._counts[primitive] += 1
        self._local.count = self.thread_total() + 1

    def thread_total(self) -> int:
        """Calls recorded by the current thread since it started."""
        return getattr(self._local, 'count', 0)

    def total(self) -> int:
        with self._lock:
            return sum(self._counts.values())

    def snapshot(self) -> Dict[str, int]:
        with self._lock:
            return dict(self._counts)

    def reset(self):
        with self._lock:
            self._counts.clear()


# Global instance
augmentation_counter = AugmentationCounter()


@dataclass(frozen=True)
class SoftLabel:
    """Probability vector over classes."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or not is_simplex_rows(probs[None, :]):
            raise AugmentationError(f"Soft label must be a nonnegative vector summing to 1, got {probs}")
        object.__setattr__(self, 'probs', probs)

    @property
    def num_classes(self) -> int:
        return int(self.probs.shape[0])


def is_simplex_rows(labels: np.ndarray, tol: float = SIMPLEX_TOLERANCE) -> bool:
    """True when every row is nonnegative and sums to 1 within ``tol``."""
    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.shape[1] < 1:
        return False
    return bool(np.all(labels >= 0) and np.all(np.abs(labels.sum(axis=1) - 1.0) <= tol))


def one_hot(class_ids, num_classes: int) -> np.ndarray:
    """One-hot rows for integer class ids."""
    class_ids = np.asarray(class_ids, dtype=np.int64)
    if class_ids.size and (class_ids.min() < 0 or class_ids.max() >= num_classes):
        raise AugmentationError(f"Class ids must lie in [0, {num_classes}), got {class_ids.min()}..{class_ids.max()}")
    labels = np.zeros((class_ids.shape[0], num_classes), dtype=np.float64)
    labels[np.arange(class_ids.shape[0]), class_ids] = 1.0
    return labels


@dataclass(frozen=True)
class LabeledBatch:
    """n windows of uniform shape (T, C) paired with n soft labels.

    Windows are stored as one (n, T, C) array, labels as an (n, K) array.
    """

    windows: np.ndarray
    labels: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        windows = np.asarray(self.windows, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.float64)
        if windows.ndim != 3:
            raise AugmentationError(f"Batch windows must be shaped (n, T, C), got {windows.shape}")
        if labels.ndim != 2:
            raise AugmentationError(f"Batch labels must be shaped (n, K), got {labels.shape}")
        if windows.shape[0] < 1 or windows.shape[0] != labels.shape[0]:
            raise AugmentationError(
                f"Batch needs n >= 1 windows and as many labels, got {windows.shape[0]} windows "
                f"and {labels.shape[0]} labels"
            )
        if not np.all(np.isfinite(windows)):
            raise AugmentationError("Batch windows must be finite")
        if not is_simplex_rows(labels):
            raise AugmentationError("Batch labels must lie on the class simplex")
        if not self.sample_rate_hz > 0:
            raise AugmentationError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, 'windows', windows)
        object.__setattr__(self, 'labels', labels)

    def __len__(self) -> int:
        return int(self.windows.shape[0])

    @property
    def num_timesteps(self) -> int:
        return int(self.windows.shape[1])

    @property
    def num_channels(self) -> int:
        return int(self.windows.shape[2])

    @property
    def num_classes(self) -> int:
        return int(self.labels.shape[1])

    def window(self, index: int) -> Window:
        return Window(self.windows[index], self.sample_rate_hz)

    def soft_label(self, index: int) -> SoftLabel:
        return SoftLabel(self.labels[index])

    def take(self, indices) -> 'LabeledBatch':
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledBatch(self.windows[indices], self.labels[indices], self.sample_rate_hz)

    def copy(self) -> 'LabeledBatch':
        return LabeledBatch(self.windows.copy(), self.labels.copy(), self.sample_rate_hz)


def concat_batches(first: LabeledBatch, second: LabeledBatch) -> LabeledBatch:
    """Stack two batches with matching (T, C, K) and sample rate."""
    if (first.windows.shape[1:] != second.windows.shape[1:]
            or first.num_classes != second.num_classes
            or first.sample_rate_hz != second.sample_rate_hz):
        raise AugmentationError("Cannot concatenate batches with different shapes or sample rates")
    return LabeledBatch(
        np.concatenate([first.windows, second.windows], axis=0),
        np.concatenate([first.labels, second.labels], axis=0),
        first.sample_rate_hz,
    )


@dataclass(frozen=True)
class BetaParams:
    """Symmetric Beta(alpha, alpha) parameters."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise InvalidParameterError(f"Beta alpha must be a positive finite number, got {self.alpha}")


@dataclass(frozen=True)
class MixPlan:
    """Shuffled partner index for every sample plus one mixing weight."""

    pairing: np.ndarray
    lam: float

    def __post_init__(self):
        pairing = np.asarray(self.pairing, dtype=np.int64)
        n = pairing.shape[0]
        if pairing.ndim != 1 or not np.array_equal(np.sort(pairing), np.arange(n)):
            raise AugmentationError("MixPlan pairing must be a permutation of 0..n-1")
        if not 0.0 <= self.lam <= 1.0:
            raise AugmentationError(f"MixPlan lambda must lie in [0, 1], got {self.lam}")
        object.__setattr__(self, 'pairing', pairing)


def sample_lambda(params: BetaParams, rng: np.random.Generator) -> float:
    """Draw lambda ~ Beta(alpha, alpha) as G1 / (G1 + G2) with Gi ~ Gamma(alpha, 1)."""
    alpha = float(params.alpha)
    if not alpha > 0:
        raise InvalidParameterError(f"Beta alpha must be positive, got {alpha}")
    g1 = rng.standard_gamma(alpha)
    g2 = rng.standard_gamma(alpha)
    total = g1 + g2
    if total == 0.0:
        # both gammas underflowed (tiny alpha): the mass sits at the endpoints
        return 1.0 if g1 >= g2 else 0.0
    return float(min(1.0, max(0.0, g1 / total)))


def draw_mix_plan(n: int, params: BetaParams, rng: np.random.Generator) -> MixPlan:
    """Shuffle the indices, then draw one lambda for the whole batch."""
    pairing = rng.permutation(n)
    lam = sample_lambda(params, rng)
    return MixPlan(pairing=pairing, lam=lam)


# Rotation

def sample_quaternions(n: int, rng: np.random.Generator) -> np.ndarray:
    """n unit quaternions (x, y, z, w), uniform over SO(3)."""
    quats = rng.standard_normal((n, 4))
    norms = np.linalg.norm(quats, axis=1, keepdims=True)
    # a zero draw has probability zero; map it to the identity anyway
    quats = np.where(norms > 0, quats / np.where(norms > 0, norms, 1.0), np.array([0.0, 0.0, 0.0, 1.0]))
    return quats


def quaternions_to_matrices(quats: np.ndarray) -> np.ndarray:
    """Rotation matrices, shape (n, 3, 3), for unit quaternions (x, y, z, w)."""
    return Rotation.from_quat(np.atleast_2d(quats)).as_matrix()


def rotate_windows(windows: np.ndarray, matrices: np.ndarray) -> np.ndarray:
    """Apply matrix n to every timestep of every (x, y, z) group of window n."""
    n, length, channels = windows.shape
    grouped = windows.reshape(n, length, channels // 3, 3)
    rotated = np.einsum('ntgj,nij->ntgi', grouped, matrices)
    return rotated.reshape(n, length, channels)


def rotation(batch: LabeledBatch, rng: np.random.Generator) -> LabeledBatch:
    """Rotate each window by its own random R in SO(3); labels unchanged."""
    if batch.num_channels % 3 != 0:
        raise ChannelGroupingError(
            f"Rotation needs channels in consecutive (x, y, z) triples, got {batch.num_channels} channels"
        )
    augmentation_counter.record('rotation')
    matrices = quaternions_to_matrices(sample_quaternions(len(batch), rng))
    return LabeledBatch(rotate_windows(batch.windows, matrices), batch.labels.copy(), batch.sample_rate_hz)


# Synthetic primitives

def _mixed_labels(batch: LabeledBatch, pairing: np.ndarray, weight: float) -> np.ndarray:
    return weight * batch.labels + (1.0 - weight) * batch.labels[pairing]


def mixup_with_plan(batch: LabeledBatch, plan: MixPlan) -> LabeledBatch:
    """x_i' = lam x_i + (1 - lam) x_j, same weights for the labels."""
    lam, pairing = plan.lam, plan.pairing
    windows = lam * batch.windows + (1.0 - lam) * batch.windows[pairing]
    return LabeledBatch(windows, _mixed_labels(batch, pairing, lam), batch.sample_rate_hz)


def mixup(batch: LabeledBatch, params: BetaParams, rng: np.random.Generator) -> LabeledBatch:
    augmentation_counter.record('mixup')
    return mixup_with_plan(batch, draw_mix_plan(len(batch), params, rng))


def ricap_cut_point(lam: float, num_timesteps: int) -> int:
    """s = round(lam * T) (halves rounded up), clamped to [0, T]."""
    cut = int(np.floor(lam * num_timesteps + 0.5))
    return min(max(cut, 0), num_timesteps)


def ricap_with_plan(batch: LabeledBatch, plan: MixPlan) -> LabeledBatch:
    """Front s samples of x_i followed by the last T - s samples of x_j."""
    length = batch.num_timesteps
    if length < 2:
        raise AugmentationError(f"1-D RICAP needs T >= 2, got {length}")
    cut = ricap_cut_point(plan.lam, length)
    windows = np.concatenate(
        [batch.windows[:, :cut, :], batch.windows[plan.pairing, cut:, :]], axis=1
    )
    weight = cut / length
    return LabeledBatch(windows, _mixed_labels(batch, plan.pairing, weight), batch.sample_rate_hz)


def ricap_1d(batch: LabeledBatch, params: BetaParams, rng: np.random.Generator) -> LabeledBatch:
    augmentation_counter.record('ricap')
    return ricap_with_plan(batch, draw_mix_plan(len(batch), params, rng))


def octave_pairs(batch: LabeledBatch, pairing: np.ndarray, spec: FilterSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Swapped composites g1 = low_i + high_j and g2 = low_j + high_i for the batch."""
    low, high = decompose_array(batch.windows, spec, axis=1)
    g1 = low + high[pairing]
    g2 = low[pairing] + high
    return g1, g2


def octave_mix_with_plan(batch: LabeledBatch, plan: MixPlan, spec: FilterSpec) -> LabeledBatch:
    """x_i' = lam g1 + (1 - lam) g2, y_i' = lam y_i + (1 - lam) y_j."""
    g1, g2 = octave_pairs(batch, plan.pairing, spec)
    windows = plan.lam * g1 + (1.0 - plan.lam) * g2
    return LabeledBatch(windows, _mixed_labels(batch, plan.pairing, plan.lam), batch.sample_rate_hz)


def octave_mix(batch: LabeledBatch, params: BetaParams, spec: FilterSpec,
               rng: np.random.Generator) -> LabeledBatch:
    """Octave Mix over a mini-batch; reduces to mixup for a pass-through cutoff."""
    if spec.sample_rate_hz != batch.sample_rate_hz:
        raise AugmentationError(
            f"Filter designed for {spec.sample_rate_hz} Hz applied to a {batch.sample_rate_hz} Hz batch"
        )
    augmentation_counter.record('octave_mix')
    return octave_mix_with_plan(batch, draw_mix_plan(len(batch), params, rng), spec)
