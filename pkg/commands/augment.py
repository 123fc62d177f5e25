"""``augment``: window a corpus, apply one policy and dump the result as tensors."""

import json
import logging
from typing import Dict

import numpy as np

from commands.common import check_policies_for, load_recordings
from config.run_config import RunConfig
from database.tensor_container import write_tensor
from dataset.windowing import build_batch
from modules.errors import DatasetError
from modules.policies import apply_policy
from utils.seeding import STREAM_AUGMENT, derive_rng
from utils.task_pool import pool_for

logger = logging.getLogger(__name__)

WINDOWS_FILE = 'windows.octm'
LABELS_FILE = 'labels.octm'
SUMMARY_FILE = 'augment.json'


def run(cfg: RunConfig) -> Dict:
    recordings = load_recordings(cfg, pool_for(cfg.workers))
    batch, load_report = build_batch(recordings, cfg.data.windowing, cfg.data.num_classes)
    if batch is None:
        raise DatasetError("The corpus yields no windows")
    if cfg.max_windows is not None and len(batch) > cfg.max_windows:
        batch = batch.take(np.arange(cfg.max_windows))
    policy = cfg.augment_policy
    check_policies_for([policy], batch)

    result = apply_policy(batch, policy, derive_rng(cfg.seed, STREAM_AUGMENT))
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    files = {
        'windows': write_tensor(cfg.output_dir / WINDOWS_FILE, result.windows),
        'labels': write_tensor(cfg.output_dir / LABELS_FILE, result.labels),
    }
    summary = {
        'policy': policy.describe(),
        'apply_prob': policy.apply_prob,
        'seed': cfg.seed,
        'input_windows': len(batch),
        'output_windows': len(result),
        'augmented': len(result) > len(batch),
        'load': load_report.to_dict(),
    }
    with open(cfg.output_dir / SUMMARY_FILE, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write('\n')
    files['summary'] = cfg.output_dir / SUMMARY_FILE
    logger.info(f"Augmented {len(batch)} windows with {policy.describe()}: {len(result)} windows written")
    return {'summary': summary, 'files': files}
