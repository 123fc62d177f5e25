"""``sweep``: hyper-parameter grid over alpha (and the Octave Mix cutoff)."""

import logging
from dataclasses import replace
from typing import Dict, Optional, Tuple

from audit.run_log import run_log
from commands.common import check_policies_for, experiment_config, load_recordings, prepare_trial_data, trial_seed
from config.run_config import RunConfig
from modules.errors import DatasetError
from modules.experiments import KIND_PLAIN, Variant, run_experiment
from modules.policies import PolicyParams, build_policy
from reports.sweep_reports import SweepCell, write_sweep_outputs
from utils.task_pool import pool_for

logger = logging.getLogger(__name__)

Cell = Tuple[str, float, Optional[float]]


def cell_params(base: PolicyParams, method: str, alpha: float, cutoff_hz: Optional[float]) -> PolicyParams:
    if method == 'rot+octmix':
        return replace(base, octmix_alpha=alpha, octmix_cutoff_hz=cutoff_hz)
    if method == 'rot+mixup':
        return replace(base, mixup_alpha=alpha)
    return replace(base, ricap_alpha=alpha)


def run(cfg: RunConfig) -> Dict:
    pool = pool_for(cfg.workers)
    recordings = load_recordings(cfg, pool)
    # every cell trains on the same subjects: trial 0 of the first subject count
    trial_data = prepare_trial_data(recordings, cfg, 0, cfg.data.train_counts[0])
    splits = trial_data.splits
    if splits.valid is None:
        raise DatasetError("The sweep needs validation windows to select cells")
    cells = cfg.sweep.cells()
    check_policies_for([build_policy(m, cell_params(cfg.policy_params, m, a, f)) for m, a, f in cells],
                       splits.train)
    seed = trial_seed(cfg.seed, 0)

    def run_cell(cell: Cell) -> SweepCell:
        method, alpha, cutoff_hz = cell
        params = cell_params(cfg.policy_params, method, alpha, cutoff_hz)
        variant = Variant(method, KIND_PLAIN, (method,))
        result = run_experiment(variant, splits, experiment_config(cfg, splits.train, seed, params),
                                metadata={**trial_data.metadata, 'alpha': alpha, 'cutoff_hz': cutoff_hz})
        test = result.report('test')
        run_log.log_event('sweep_cell_finished', f"{method} alpha={alpha} cutoff={cutoff_hz}",
                          {'best_val_accuracy': result.best_val_accuracy, 'test_accuracy': test.accuracy})
        return SweepCell(method=method, alpha=alpha, cutoff_hz=cutoff_hz,
                         best_val_accuracy=result.best_val_accuracy, test_accuracy=test.accuracy,
                         test_macro_f1=test.macro_f1, epochs=cfg.train.pretrain_epochs)

    results = pool.map_ordered(run_cell, cells)
    written = write_sweep_outputs(results, cfg.output_dir, excel=cfg.train.excel)
    logger.info(f"Sweep finished: {len(results)} cells")
    return {'cells': results, 'files': written}
