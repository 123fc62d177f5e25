"""``inspect-filter``: dump the low-pass kernel and its magnitude response."""

import logging
from typing import Dict

import numpy as np

from config.run_config import RunConfig
from database.tensor_container import write_tensor
from modules.filters import design_lowpass, frequency_response

logger = logging.getLogger(__name__)

TAPS_FILE = 'taps.octm'
RESPONSE_FILE = 'response.octm'


def run(cfg: RunConfig) -> Dict:
    spec = cfg.filter.filter_spec()
    kernel = design_lowpass(spec)
    freqs, magnitude = frequency_response(kernel, spec.sample_rate_hz, cfg.filter.response_points)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    files = {
        'taps': write_tensor(cfg.output_dir / TAPS_FILE, kernel.taps),
        # (points, 2): frequency in Hz, |H|
        'response': write_tensor(cfg.output_dir / RESPONSE_FILE, np.stack([freqs, magnitude], axis=1)),
    }
    logger.info(f"{kernel.num_taps}-tap low-pass at {spec.cutoff_hz} Hz "
                f"(fs={spec.sample_rate_hz} Hz){' is pass-through' if kernel.is_identity else ''}")
    return {'num_taps': kernel.num_taps, 'files': files}
