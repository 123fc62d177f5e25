"""``eval``: reload a saved model directory and score it on one split."""

import logging
from typing import Dict

from commands.common import load_recordings, prepare_trial_data
from config.run_config import RunConfig
from database.model_store import load_model
from modules.ensemble import predict
from modules.errors import DatasetError, ShapeError
from reports.metrics import evaluate_predictions
from reports.trial_reports import write_trial_outputs
from utils.task_pool import pool_for

logger = logging.getLogger(__name__)

EVAL_DIR = 'eval'


def run(cfg: RunConfig) -> Dict:
    model, manifest = load_model(cfg.eval.model_dir)
    saved = manifest.get('metadata', {})
    trial = cfg.eval.trial if cfg.eval.trial is not None else int(saved.get('trial_id', 0))
    n_train = (cfg.eval.n_train_subjects or saved.get('n_train_subjects') or cfg.data.train_counts[0])

    recordings = load_recordings(cfg, pool_for(cfg.workers))
    trial_data = prepare_trial_data(recordings, cfg, trial, int(n_train))
    batch = getattr(trial_data.splits, cfg.eval.split)
    if batch is None:
        raise DatasetError(f"Split '{cfg.eval.split}' has no windows for trial {trial}")
    if batch.num_classes != model.config.num_classes:
        raise ShapeError(f"Model predicts {model.config.num_classes} classes, corpus has {batch.num_classes}")

    _, predicted = predict(model, batch)
    metadata = {
        'variant': saved.get('variant', ''),
        'policies': saved.get('policies', ''),
        'model_dir': str(cfg.eval.model_dir),
        **trial_data.metadata,
    }
    report = evaluate_predictions(batch.labels.argmax(axis=1), predicted, batch.num_classes,
                                  trial, cfg.eval.split, metadata)
    logger.info(f"{cfg.eval.model_dir} on {cfg.eval.split}: accuracy={report.accuracy:.4f} "
                f"macro_f1={report.macro_f1:.4f}")
    written = write_trial_outputs([report], cfg.output_dir / EVAL_DIR, excel=cfg.train.excel)
    return {'reports': [report], 'files': written}
