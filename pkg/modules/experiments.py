"""Named training variants and the single-trial experiment runner."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from modules.augmentation import LabeledBatch
from modules.ensemble import (DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, EnsembleModel, TrainConfig, TrainTrace,
                              predict, train_da_revisited, train_dar_ffe, train_simple_ensemble)
from modules.errors import AugmentationError, UnknownVariantError
from modules.network import ModelConfig
from modules.optimizer import DEFAULT_LEARNING_RATE
from modules.policies import (AugPolicy, PolicyParams, describe_policies, policy_from_config)
from reports.metrics import TrialReport, evaluate_predictions
from utils.task_pool import TaskPool, serial_pool

logger = logging.getLogger(__name__)

KIND_PLAIN = 'plain'
KIND_SIMPLE = 'simple-ensemble'
KIND_DAR_FFE = 'dar-ffe'
KIND_REVISITED = 'da-revisited'
KINDS = (KIND_PLAIN, KIND_SIMPLE, KIND_DAR_FFE, KIND_REVISITED)

PolicySource = Union[str, Dict]


@dataclass(frozen=True)
class Variant:
    """Training procedure plus one policy per branch."""

    name: str
    kind: str
    policies: Tuple[PolicySource, ...]
    note: str = ""

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if self.kind not in KINDS:
            errors.append(f"variant '{self.name}': unknown kind '{self.kind}', expected one of {', '.join(KINDS)}")
        if not self.policies:
            errors.append(f"variant '{self.name}': at least one policy is required")
        if self.kind in (KIND_PLAIN, KIND_REVISITED) and len(self.policies) != 1:
            errors.append(f"variant '{self.name}': kind '{self.kind}' trains a single branch, "
                          f"got {len(self.policies)} policies")
        return len(errors) == 0, errors

    @property
    def num_branches(self) -> int:
        return len(self.policies)

    def build_policies(self, params: Optional[PolicyParams] = None) -> Tuple[AugPolicy, ...]:
        return tuple(policy_from_config(p, params) for p in self.policies)


PROPOSED_POLICIES = ('rot+octmix', 'rot+mixup')

VARIANTS: Dict[str, Variant] = {v.name: v for v in [
    Variant('none', KIND_PLAIN, ('none',), "Without DA"),
    Variant('rotation', KIND_PLAIN, ('rot',), "With Rotation"),
    Variant('rot+mixup', KIND_PLAIN, ('rot+mixup',)),
    Variant('rot+ricap', KIND_PLAIN, ('rot+ricap',)),
    Variant('rot+octmix', KIND_PLAIN, ('rot+octmix',), "With Rot. & OctMix"),
    Variant('simple-ensemble', KIND_SIMPLE, PROPOSED_POLICIES),
    Variant('dar-ffe-single', KIND_DAR_FFE, ('rot+octmix',)),
    Variant('dar-ffe-ensemble', KIND_DAR_FFE, PROPOSED_POLICIES, "Proposed pipeline"),
    Variant('da-revisited', KIND_REVISITED, ('rot+octmix',), "Retrain everything on clean data"),
    # ablation rows
    Variant('ablation-1', KIND_PLAIN, ('none',), "Without DA"),
    Variant('ablation-2', KIND_PLAIN, ('rot',), "With Rotation"),
    Variant('ablation-3', KIND_PLAIN, ('rot+octmix',), "With Rot. & OctMix"),
    Variant('ablation-4', KIND_SIMPLE, ('rot+ricap', 'rot+mixup'), "Ensemble Rot.&RICAP and Rot.&mixup"),
    Variant('ablation-5', KIND_DAR_FFE, ('rot',), "DAR-FFE from ablation-2"),
    Variant('ablation-6', KIND_SIMPLE, PROPOSED_POLICIES, "Ensemble Rot.&OctMix and Rot.&mixup"),
    Variant('ablation-7', KIND_DAR_FFE, ('rot+octmix',), "DAR-FFE from ablation-3"),
    Variant('ablation-8', KIND_DAR_FFE, ('rot+ricap', 'rot+mixup'), "DAR-FFE from ablation-4"),
    Variant('ablation-9', KIND_DAR_FFE, PROPOSED_POLICIES, "DAR-FFE from ablation-6"),
    # ensemble patterns
    Variant('pattern-a', KIND_DAR_FFE, ('rot+mixup', 'rot+ricap'), "Rotation & mixup / RICAP"),
    Variant('pattern-b', KIND_DAR_FFE, PROPOSED_POLICIES, "Rotation & OctMix / mixup"),
    Variant('pattern-c', KIND_DAR_FFE, ('rot+ricap', 'rot+octmix'), "Rotation & RICAP / OctMix"),
    Variant('pattern-d', KIND_DAR_FFE, ('rot+mixup', 'rot+ricap', 'rot+octmix'), "Rotation & mixup / RICAP / OctMix"),
]}

DEFAULT_VARIANT = 'dar-ffe-ensemble'


def resolve_variant(spec: Union[str, Dict]) -> Variant:
    """Variant from a registered name or a ``{"kind": ..., "policies": [...]}`` mapping."""
    if isinstance(spec, str):
        if spec not in VARIANTS:
            raise UnknownVariantError(f"Unknown variant '{spec}'; known variants: {', '.join(VARIANTS)}")
        return VARIANTS[spec]
    if not isinstance(spec, dict):
        raise UnknownVariantError(f"Variant must be a name or a mapping, got {type(spec).__name__}")
    unknown = set(spec) - {'name', 'kind', 'policies', 'note'}
    if unknown:
        raise UnknownVariantError(f"Unknown variant keys: {', '.join(sorted(unknown))}")
    variant = Variant(
        name=str(spec.get('name', 'custom')),
        kind=str(spec.get('kind', '')),
        policies=tuple(spec.get('policies', ())),
        note=str(spec.get('note', '')),
    )
    is_valid, errors = variant.validate()
    if not is_valid:
        raise UnknownVariantError("; ".join(errors))
    return variant


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a trial needs besides the data and the variant."""

    model: ModelConfig
    pretrain_epochs: int = DEFAULT_EPOCHS
    classifier_epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    lr: float = DEFAULT_LEARNING_RATE
    seed: int = 0
    policy_params: PolicyParams = field(default_factory=PolicyParams)

    def train_config(self, policies: Tuple[AugPolicy, ...]) -> TrainConfig:
        return TrainConfig(policies=policies, pretrain_epochs=self.pretrain_epochs,
                           classifier_epochs=self.classifier_epochs, batch_size=self.batch_size,
                           seed=self.seed, lr=self.lr)


@dataclass
class DataSplits:
    train: LabeledBatch
    test: LabeledBatch
    valid: Optional[LabeledBatch] = None

    def evaluation_splits(self) -> List[Tuple[str, LabeledBatch]]:
        splits = [('valid', self.valid)] if self.valid is not None else []
        return splits + [('test', self.test)]


@dataclass
class ExperimentResult:
    variant: Variant
    policies: Tuple[AugPolicy, ...]
    model: EnsembleModel
    traces: List[TrainTrace]
    reports: List[TrialReport]

    @property
    def final_trace(self) -> TrainTrace:
        return self.traces[-1]

    @property
    def best_val_accuracy(self) -> Optional[float]:
        """Best validation accuracy over the epochs of the final training phase."""
        return self.final_trace.best_val_accuracy

    def report(self, split: str) -> TrialReport:
        return next(r for r in self.reports if r.split == split)


def train_variant(variant: Variant, model: EnsembleModel, data: DataSplits, cfg: TrainConfig,
                  pool: TaskPool = serial_pool) -> List[TrainTrace]:
    if variant.kind in (KIND_PLAIN, KIND_SIMPLE):
        return [train_simple_ensemble(model, data.train, cfg, data.valid)]
    if variant.kind == KIND_DAR_FFE:
        return train_dar_ffe(model, data.train, cfg, data.valid, pool=pool)
    if variant.kind == KIND_REVISITED:
        return train_da_revisited(model, data.train, cfg, data.valid)
    raise UnknownVariantError(f"Unknown variant kind '{variant.kind}'")


def run_experiment(variant: Union[str, Dict, Variant], data: DataSplits, cfg: ExperimentConfig,
                   trial_id: int = 0, metadata: Optional[Dict] = None,
                   pool: TaskPool = serial_pool) -> ExperimentResult:
    """Train one variant from scratch and evaluate it on the held-out splits."""
    if not isinstance(variant, Variant):
        variant = resolve_variant(variant)
    policies = variant.build_policies(cfg.policy_params)
    for policy in policies:
        is_valid, errors = policy.validate_for(data.train.num_timesteps, data.train.num_channels,
                                               data.train.sample_rate_hz)
        if not is_valid:
            raise AugmentationError(f"Variant '{variant.name}' cannot run on this data: " + "; ".join(errors))

    described = describe_policies(policies)
    logger.info(f"Trial {trial_id}: variant {variant.name} ({variant.kind}) with {described}")
    model = EnsembleModel.initialize(cfg.model, variant.num_branches, cfg.seed)
    traces = train_variant(variant, model, data, cfg.train_config(policies), pool=pool)

    info = {
        'variant': variant.name,
        'kind': variant.kind,
        'policies': described,
        'seed': cfg.seed,
        **(metadata or {}),
    }
    reports = []
    for split, batch in data.evaluation_splits():
        _, predicted = predict(model, batch)
        reports.append(evaluate_predictions(batch.labels.argmax(axis=1), predicted, batch.num_classes,
                                            trial_id, split, info))
    logger.info(f"Trial {trial_id} done: "
                + ", ".join(f"{r.split} acc={r.accuracy:.4f} f1={r.macro_f1:.4f}" for r in reports))
    return ExperimentResult(variant, policies, model, traces, reports)
