"""Dataset presets and model-scale defaults."""

from dataclasses import dataclass
from typing import Dict, Tuple

from modules.network import FULL_SCALE_WIDTHS


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    n_train_subjects: int
    n_valid_subjects: int
    n_test_subjects: int
    sample_rate_hz: float
    frame: int
    stride: int
    trim_s: float
    channels: int
    num_classes: int


DATASET_PRESETS: Dict[str, DatasetPreset] = {
    'hasc': DatasetPreset('hasc', 10, 50, 50, 100.0, 256, 256, 5.0, 3, 6),
    'pamap2': DatasetPreset('pamap2', 4, 2, 2, 100.0, 256, 256, 0.0, 36, 12),
    # UCI Smartphone and UniMiB SHAR ship pre-segmented windows
    'uci': DatasetPreset('uci', 10, 10, 10, 50.0, 128, 128, 0.0, 6, 6),
    'unimib': DatasetPreset('unimib', 10, 10, 10, 50.0, 151, 151, 0.0, 3, 17),
    'synthetic': DatasetPreset('synthetic', 20, 5, 5, 100.0, 256, 256, 0.0, 3, 3),
}

DESK_SCALE_WIDTHS: Tuple[int, ...] = (8, 16, 32)
MODEL_SCALES: Dict[str, Tuple[int, ...]] = {
    'full': FULL_SCALE_WIDTHS,
    'desk': DESK_SCALE_WIDTHS,
}

DEFAULT_SWEEP_ALPHAS: Tuple[float, ...] = (0.5, 1.0, 5.0)
DEFAULT_SWEEP_CUTOFFS_HZ: Tuple[float, ...] = (0.1, 1.1, 2.1, 3.1, 4.1, 5.1)
