"""``train``: independent trials of one variant, per-trial reports and the summary."""

import json
import logging
from pathlib import Path
from typing import Dict, List, Tuple

from audit.run_log import run_log
from commands.common import (TrialData, check_policies_for, experiment_config, load_recordings,
                             prepare_trial_data, trial_seed)
from config.run_config import RunConfig
from database.model_store import save_model
from modules.experiments import run_experiment
from reports.metrics import TrialReport
from reports.trial_reports import write_trial_outputs
from utils.task_pool import pool_for, serial_pool

logger = logging.getLogger(__name__)

MODELS_DIR = 'models'
TRACES_DIR = 'traces'


def run_name(trial: int, n_train_subjects: int) -> str:
    return f"trial{trial:03d}_n{n_train_subjects:03d}"


def write_traces(traces, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump([t.to_dict() for t in traces], f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def run(cfg: RunConfig) -> Dict:
    pool = pool_for(cfg.workers)
    recordings = load_recordings(cfg, pool)

    # every split is prepared (and checked) before the first epoch runs
    jobs: List[TrialData] = [prepare_trial_data(recordings, cfg, trial, n)
                             for n in cfg.data.train_counts for trial in range(cfg.trials)]
    check_policies_for(cfg.variant.build_policies(cfg.policy_params), jobs[0].splits.train)
    # with a single job the workers go to the DAR-FFE branches instead
    branch_pool = pool if len(jobs) == 1 else serial_pool
    job_pool = serial_pool if len(jobs) == 1 else pool

    def run_job(job: TrialData) -> List[TrialReport]:
        name = run_name(job.trial, job.n_train_subjects)
        seed = trial_seed(cfg.seed, job.trial)
        result = run_experiment(cfg.variant, job.splits, experiment_config(cfg, job.splits.train, seed),
                                trial_id=job.trial, metadata=job.metadata, pool=branch_pool)
        write_traces(result.traces, cfg.output_dir / TRACES_DIR / f"{name}.json")
        if cfg.train.save_model:
            save_model(result.model, cfg.output_dir / MODELS_DIR / name,
                       {**result.reports[0].metadata, 'trial_id': job.trial})
        run_log.log_event('trial_finished', f"Trial {job.trial} with {job.n_train_subjects} training subjects",
                          {'trial': job.trial, 'n_train_subjects': job.n_train_subjects,
                           **{f"{r.split}_accuracy": r.accuracy for r in result.reports}})
        return result.reports

    reports = [report for batch in job_pool.map_ordered(run_job, jobs) for report in batch]
    written = write_trial_outputs(reports, cfg.output_dir, excel=cfg.train.excel)
    logger.info(f"Finished {len(jobs)} training runs of variant {cfg.variant.name}")
    return {'reports': reports, 'files': written}
