"""Corpus loading and per-trial data preparation shared by the commands."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from config.run_config import RunConfig
from dataset.csv_corpus import load_csv_corpus
from dataset.recordings import Recording
from dataset.splits import SplitSpec, split_by_subject
from dataset.synthetic import generate_synthetic
from dataset.windowing import build_batch
from modules.augmentation import LabeledBatch
from modules.errors import ConfigError, DatasetError
from modules.experiments import DataSplits, ExperimentConfig
from modules.policies import AugPolicy
from utils.seeding import STREAM_SPLIT, derive_rng, derive_seed
from utils.task_pool import TaskPool, serial_pool

logger = logging.getLogger(__name__)


def load_recordings(cfg: RunConfig, pool: TaskPool = serial_pool) -> List[Recording]:
    """Recordings of the configured corpus (CSV manifest or generated)."""
    data = cfg.data
    if data.source == 'csv':
        return load_csv_corpus(data.manifest, data.class_names, data.num_classes, pool=pool)
    return generate_synthetic(data.synth)


def trial_seed(seed: int, trial: int) -> int:
    """Model seed of one trial; split sampling uses its own stream."""
    return derive_seed(seed, trial)


@dataclass
class TrialData:
    trial: int
    n_train_subjects: int
    splits: DataSplits
    metadata: Dict = field(default_factory=dict)


def prepare_trial_data(recordings: Sequence[Recording], cfg: RunConfig, trial: int,
                       n_train_subjects: int) -> TrialData:
    """Subject split for (trial, n_train_subjects) windowed into batches."""
    data = cfg.data
    spec = SplitSpec(n_train_subjects, data.n_valid_subjects, data.n_test_subjects, seed=cfg.seed)
    split = split_by_subject(recordings, spec, derive_rng(cfg.seed, STREAM_SPLIT, trial))

    batches, loads = {}, {}
    for name, members in (('train', split.train), ('valid', split.valid), ('test', split.test)):
        if not members:
            batches[name] = None
            continue
        batch, report = build_batch(members, data.windowing, data.num_classes)
        batches[name] = batch
        loads[name] = report.to_dict()
    for name in ('train', 'test'):
        if batches[name] is None:
            raise DatasetError(f"Trial {trial}: the {name} subjects yield no "
                               f"{data.windowing.frame}-sample windows")
    if data.n_valid_subjects and batches['valid'] is None:
        logger.warning(f"Trial {trial}: validation subjects yield no windows; training without validation")

    metadata = {
        'n_train_subjects': n_train_subjects,
        'train_subjects': split.train_subjects,
        'valid_subjects': split.valid_subjects,
        'test_subjects': split.test_subjects,
        'windows': {name: load['windows'] for name, load in loads.items()},
        'excluded_recordings': sum(load['excluded_recordings'] for load in loads.values()),
    }
    splits = DataSplits(train=batches['train'], test=batches['test'], valid=batches['valid'])
    return TrialData(trial, n_train_subjects, splits, metadata)


def experiment_config(cfg: RunConfig, batch: LabeledBatch, seed: int, policy_params=None) -> ExperimentConfig:
    return ExperimentConfig(
        model=cfg.model.model_config(batch.num_classes, batch.num_channels),
        pretrain_epochs=cfg.train.pretrain_epochs,
        classifier_epochs=cfg.train.classifier_epochs,
        batch_size=cfg.train.batch_size,
        lr=cfg.train.lr,
        seed=seed,
        policy_params=policy_params or cfg.policy_params,
    )


def check_policies_for(policies: Sequence[AugPolicy], batch: LabeledBatch):
    """Reject policies that cannot run on the loaded windows, before training starts."""
    errors = []
    for policy in policies:
        is_valid, problems = policy.validate_for(batch.num_timesteps, batch.num_channels, batch.sample_rate_hz)
        if not is_valid:
            errors.extend(f"policy {policy.describe()}: {p}" for p in problems)
    if errors:
        raise ConfigError(errors)
