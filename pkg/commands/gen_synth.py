"""``gen-synth``: write a synthetic corpus as CSV recordings plus a manifest."""

import logging
from typing import Dict

from config.run_config import RunConfig
from dataset.csv_corpus import write_csv_corpus
from dataset.synthetic import generate_synthetic

logger = logging.getLogger(__name__)


def run(cfg: RunConfig) -> Dict:
    recordings = generate_synthetic(cfg.data.synth)
    manifest = write_csv_corpus(recordings, cfg.output_dir)
    return {'recordings': len(recordings), 'manifest': manifest}
