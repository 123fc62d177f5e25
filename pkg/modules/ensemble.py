"""DA ensemble model and its training phases.

The ensemble holds K feature extractors E_k, one pre-training head C_k per
extractor and a combined classifier C that reads the concatenation of all K
feature vectors in branch order. Training variants:

* DAR-FFE: pretrain every (E_k, C_k) under its own policy, freeze, then train a
  fresh C on clean data.
* Simple ensemble: train every E_k and C jointly; heads unused.
* DA-revisited: one model trained under a policy, then every parameter trained
  further on clean data.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from modules.augmentation import LabeledBatch, augmentation_counter
from modules.errors import AugmentationError, FreezeContractError, ShapeError
from modules.network import Classifier, FeatureExtractor, ModelConfig, Network
from modules.optimizer import DEFAULT_LEARNING_RATE, AdamState, adam_step, freeze
from modules.policies import AugPolicy, apply_policy, augment_copy, draw_apply_coin
from reports.metrics import ConfusionMatrix, accuracy
from utils.seeding import (STREAM_AUGMENT, STREAM_CLASSIFIER, STREAM_INIT, STREAM_SHUFFLE,
                           derive_rng)
from utils.task_pool import TaskPool, serial_pool

logger = logging.getLogger(__name__)

DEFAULT_EPOCHS = 300
DEFAULT_BATCH_SIZE = 64

# Sub-stream keys for phases that are not tied to one branch
PHASE_CLASSIFIER = 1000
PHASE_JOINT = 1001
PHASE_JOINT_COIN = 1002
PHASE_REVISIT = 1003

# one array per branch, or a single array shared by every branch
Inputs = Union[np.ndarray, List[np.ndarray]]
BatchPreparer = Callable[[LabeledBatch], Tuple[Inputs, np.ndarray]]


@dataclass(frozen=True)
class TrainConfig:
    policies: Tuple[AugPolicy, ...]
    pretrain_epochs: int = DEFAULT_EPOCHS
    classifier_epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = 0
    lr: float = DEFAULT_LEARNING_RATE

    def __post_init__(self):
        object.__setattr__(self, 'policies', tuple(self.policies))

    @property
    def num_branches(self) -> int:
        return len(self.policies)

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if not self.policies:
            errors.append("at least one policy is required")
        if self.pretrain_epochs < 0:
            errors.append(f"pretrain_epochs must be >= 0, got {self.pretrain_epochs}")
        if self.classifier_epochs < 0:
            errors.append(f"classifier_epochs must be >= 0, got {self.classifier_epochs}")
        if self.batch_size < 1:
            errors.append(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            errors.append(f"lr must be positive, got {self.lr}")
        return len(errors) == 0, errors


@dataclass
class TrainTrace:
    """Per-epoch mean training loss and, when validating, validation accuracy."""

    phase: str
    losses: List[float] = field(default_factory=list)
    val_accuracy: List[float] = field(default_factory=list)
    augmentation_calls: int = 0

    @property
    def best_val_accuracy(self) -> Optional[float]:
        return max(self.val_accuracy) if self.val_accuracy else None

    def to_dict(self) -> Dict:
        return {
            'phase': self.phase,
            'losses': list(self.losses),
            'val_accuracy': list(self.val_accuracy),
            'augmentation_calls': self.augmentation_calls,
        }


@dataclass
class EnsembleModel:
    config: ModelConfig
    extractors: List[FeatureExtractor]
    heads: List[Classifier]
    combined: Classifier

    def __post_init__(self):
        if not self.extractors or len(self.extractors) != len(self.heads):
            raise ShapeError("An ensemble needs K >= 1 extractors and one head per extractor")
        if self.combined.in_dim != self.num_branches * self.config.feature_dim:
            raise ShapeError(
                f"Combined classifier width {self.combined.in_dim} != K x feature_dim "
                f"({self.num_branches} x {self.config.feature_dim})"
            )

    @classmethod
    def initialize(cls, config: ModelConfig, num_branches: int, seed: int) -> 'EnsembleModel':
        """He-uniform initialization; branch k draws from its own derived stream."""
        extractors, heads = [], []
        for k in range(num_branches):
            rng = derive_rng(seed, STREAM_INIT, k)
            extractors.append(FeatureExtractor.initialize(config, rng))
            heads.append(Classifier.initialize(config.feature_dim, config.num_classes, rng))
        combined = Classifier.initialize(
            num_branches * config.feature_dim, config.num_classes, derive_rng(seed, STREAM_CLASSIFIER)
        )
        return cls(config, extractors, heads, combined)

    @property
    def num_branches(self) -> int:
        return len(self.extractors)

    def branch_network(self, k: int) -> Network:
        """(E_k, C_k) as a trainable network."""
        return Network([self.extractors[k]], self.heads[k], prefixes=[f"extractor{k}"],
                       classifier_prefix=f"head{k}")

    def combined_network(self) -> Network:
        """(E_1..E_K, C): the prediction path."""
        return Network(self.extractors, self.combined)

    def named_parameters(self) -> Dict[str, np.ndarray]:
        named = {}
        for k in range(self.num_branches):
            named.update(self.branch_network(k).named_parameters(trainable_only=False))
        for name, value in self.combined.params.items():
            named[f"classifier.{name}"] = value
        return named


def epoch_batches(num_samples: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Shuffled index batches covering every sample once; the last one may be short."""
    order = rng.permutation(num_samples)
    for start in range(0, num_samples, batch_size):
        yield order[start:start + batch_size]


def validation_accuracy(network: Network, validation: LabeledBatch) -> float:
    probs = network.predict_proba(validation.windows)
    cm = ConfusionMatrix.from_predictions(validation.labels.argmax(axis=1), probs.argmax(axis=1),
                                          validation.num_classes)
    return accuracy(cm)


def run_epochs(network: Network, data: LabeledBatch, epochs: int, batch_size: int, state: AdamState,
               shuffle_rng: np.random.Generator, prepare: BatchPreparer, phase: str,
               validation: Optional[LabeledBatch] = None) -> TrainTrace:
    """Generic mini-batch loop: prepare each batch, then one Adam step on its loss."""
    trace = TrainTrace(phase=phase)
    calls_before = augmentation_counter.thread_total()
    params = network.named_parameters()
    for epoch in range(epochs):
        losses, weights = [], []
        for indices in epoch_batches(len(data), batch_size, shuffle_rng):
            inputs, targets = prepare(data.take(indices))
            loss, grads = network.loss_and_gradients(inputs, targets)
            if not np.isfinite(loss):
                raise ShapeError(f"{phase}: non-finite loss at epoch {epoch}")
            adam_step(state, params, grads)
            losses.append(loss)
            weights.append(targets.shape[0])
        trace.losses.append(float(np.average(losses, weights=weights)))
        if validation is not None:
            trace.val_accuracy.append(validation_accuracy(network, validation))
        logger.debug(f"{phase} epoch {epoch + 1}/{epochs}: loss={trace.losses[-1]:.6f}"
                     + (f" val_acc={trace.val_accuracy[-1]:.4f}" if validation is not None else ""))
    trace.augmentation_calls = augmentation_counter.thread_total() - calls_before
    return trace


def clean_batches(batch: LabeledBatch) -> Tuple[Inputs, np.ndarray]:
    """The untouched windows, fed to every extractor."""
    return batch.windows, batch.labels


def _check_config(model: EnsembleModel, cfg: TrainConfig):
    is_valid, errors = cfg.validate()
    if not is_valid:
        raise ShapeError("Invalid training configuration: " + "; ".join(errors))
    if cfg.num_branches != model.num_branches:
        raise ShapeError(f"{cfg.num_branches} policies supplied for a {model.num_branches}-branch model")


# DAR-FFE

def pretrain_branch(model: EnsembleModel, k: int, data: LabeledBatch, cfg: TrainConfig,
                    validation: Optional[LabeledBatch] = None) -> TrainTrace:
    """Train (E_k, C_k) for N epochs on batches augmented by policy k."""
    _check_config(model, cfg)
    if not 0 <= k < model.num_branches:
        raise ShapeError(f"Branch index {k} outside 0..{model.num_branches - 1}")
    policy = cfg.policies[k]
    augment_rng = derive_rng(cfg.seed, STREAM_AUGMENT, k)

    def prepare(batch: LabeledBatch) -> Tuple[Inputs, np.ndarray]:
        augmented = apply_policy(batch, policy, augment_rng)
        return [augmented.windows], augmented.labels

    logger.info(f"Pretraining branch {k} with {policy.describe()} for {cfg.pretrain_epochs} epochs")
    return run_epochs(model.branch_network(k), data, cfg.pretrain_epochs, cfg.batch_size,
                      AdamState(lr=cfg.lr), derive_rng(cfg.seed, STREAM_SHUFFLE, k), prepare,
                      phase=f"pretrain[{k}]", validation=validation)


def train_combined_classifier(model: EnsembleModel, data: LabeledBatch, cfg: TrainConfig,
                              validation: Optional[LabeledBatch] = None) -> TrainTrace:
    """Train C for M epochs on clean batches through the frozen extractors."""
    unfrozen = [k for k, e in enumerate(model.extractors) if not e.frozen]
    if unfrozen:
        raise FreezeContractError(
            f"Classifier training requires frozen extractors; branches {unfrozen} are trainable"
        )
    logger.info(f"Training combined classifier on clean data for {cfg.classifier_epochs} epochs")
    trace = run_epochs(model.combined_network(), data, cfg.classifier_epochs, cfg.batch_size,
                       AdamState(lr=cfg.lr), derive_rng(cfg.seed, STREAM_SHUFFLE, PHASE_CLASSIFIER),
                       clean_batches, phase="classifier", validation=validation)
    if trace.augmentation_calls:
        raise FreezeContractError(f"{trace.augmentation_calls} augmentation calls during the clean classifier phase")
    return trace


def train_dar_ffe(model: EnsembleModel, data: LabeledBatch, cfg: TrainConfig,
                  validation: Optional[LabeledBatch] = None,
                  pool: TaskPool = serial_pool) -> List[TrainTrace]:
    """Pretrain all branches (optionally in parallel), freeze them, train C."""
    _check_config(model, cfg)
    traces = pool.map_ordered(
        lambda k: pretrain_branch(model, k, data, cfg, validation), range(model.num_branches)
    )
    for extractor, head in zip(model.extractors, model.heads):
        freeze(extractor)
        freeze(head)
    traces.append(train_combined_classifier(model, data, cfg, validation))
    return traces


# Joint training

def joint_batch_preparer(cfg: TrainConfig) -> BatchPreparer:
    """Shared coin per batch; every branch augments its own copy of the batch.

    The combined classifier sees one target per sample: the mean of the branch
    targets. All branch streams start from the same seed, so the mean equals
    every branch target when the policies share their synthetic step and draw
    in the same order. Otherwise (for example RICAP next to mixup, or two
    different alphas) each branch mixes with its own partner and weight, and
    the mean is a compromise label that matches no single branch input.
    """
    policies = cfg.policies
    apply_probs = {p.apply_prob for p in policies if p.steps}
    if len(apply_probs) > 1:
        raise AugmentationError(
            f"Jointly trained branches must share one apply_prob, got {sorted(apply_probs)}"
        )
    coin_policy = next((p for p in policies if p.steps), policies[0])
    coin_rng = derive_rng(cfg.seed, STREAM_AUGMENT, PHASE_JOINT_COIN)
    branch_rngs = [derive_rng(cfg.seed, STREAM_AUGMENT, PHASE_JOINT) for _ in policies]

    def prepare(batch: LabeledBatch) -> Tuple[Inputs, np.ndarray]:
        if not draw_apply_coin(coin_policy, coin_rng):
            return [batch.windows] * len(policies), batch.labels
        copies = [augment_copy(batch, policy, rng) for policy, rng in zip(policies, branch_rngs)]
        inputs = [np.concatenate([batch.windows, c.windows], axis=0) for c in copies]
        augmented_targets = np.mean([c.labels for c in copies], axis=0)
        return inputs, np.concatenate([batch.labels, augmented_targets], axis=0)

    return prepare


def train_simple_ensemble(model: EnsembleModel, data: LabeledBatch, cfg: TrainConfig,
                          validation: Optional[LabeledBatch] = None) -> TrainTrace:
    """Train E_1..E_K and C jointly for N epochs, branch k fed through policy k."""
    _check_config(model, cfg)
    logger.info(f"Joint training of {model.num_branches} branch(es) for {cfg.pretrain_epochs} epochs")
    return run_epochs(model.combined_network(), data, cfg.pretrain_epochs, cfg.batch_size,
                      AdamState(lr=cfg.lr), derive_rng(cfg.seed, STREAM_SHUFFLE, PHASE_JOINT),
                      joint_batch_preparer(cfg), phase="joint", validation=validation)


def train_da_revisited(model: EnsembleModel, data: LabeledBatch, cfg: TrainConfig,
                       validation: Optional[LabeledBatch] = None) -> List[TrainTrace]:
    """N epochs under the policy, then M epochs of every parameter on clean data."""
    augmented = train_simple_ensemble(model, data, cfg, validation)
    logger.info(f"Retraining all parameters on clean data for {cfg.classifier_epochs} epochs")
    clean = run_epochs(model.combined_network(), data, cfg.classifier_epochs, cfg.batch_size,
                       AdamState(lr=cfg.lr), derive_rng(cfg.seed, STREAM_SHUFFLE, PHASE_REVISIT),
                       clean_batches, phase="revisit", validation=validation)
    return [augmented, clean]


def predict(model: EnsembleModel, batch) -> Tuple[np.ndarray, np.ndarray]:
    """Soft predictions and argmax class ids through E_1..E_K and C only."""
    windows = getattr(batch, 'windows', batch)
    probs = model.combined_network().predict_proba(np.asarray(windows, dtype=np.float64))
    return probs, probs.argmax(axis=1)
