"""Augmentation policies: ordered primitive steps plus an apply probability."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from modules.augmentation import (BetaParams, LabeledBatch, concat_batches, mixup,
                                  octave_mix, ricap_1d, rotation)
from modules.errors import AugmentationError
from modules.filters import FilterSpec, default_num_taps

logger = logging.getLogger(__name__)

DEFAULT_APPLY_PROB = 0.5
DEFAULT_MIXUP_ALPHA = 5.0
DEFAULT_RICAP_ALPHA = 5.0
DEFAULT_OCTMIX_ALPHA = 0.5
DEFAULT_OCTMIX_CUTOFF_HZ = 2.1


@dataclass(frozen=True)
class RotationStep:
    synthetic = False

    def apply(self, batch: LabeledBatch, rng: np.random.Generator) -> LabeledBatch:
        return rotation(batch, rng)

    def describe(self) -> str:
        return "Rot"

    def to_config(self) -> Dict:
        return {'type': 'rotation'}


@dataclass(frozen=True)
class MixupStep:
    alpha: float = DEFAULT_MIXUP_ALPHA
    synthetic = True

    def apply(self, batch: LabeledBatch, rng: np.random.Generator) -> LabeledBatch:
        return mixup(batch, BetaParams(self.alpha), rng)

    def describe(self) -> str:
        return f"mixup({float(self.alpha)})"

    def to_config(self) -> Dict:
        return {'type': 'mixup', 'alpha': self.alpha}


@dataclass(frozen=True)
class RicapStep:
    alpha: float = DEFAULT_RICAP_ALPHA
    synthetic = True

    def apply(self, batch: LabeledBatch, rng: np.random.Generator) -> LabeledBatch:
        return ricap_1d(batch, BetaParams(self.alpha), rng)

    def describe(self) -> str:
        return f"RICAP({float(self.alpha)})"

    def to_config(self) -> Dict:
        return {'type': 'ricap', 'alpha': self.alpha}


@dataclass(frozen=True)
class OctaveMixStep:
    alpha: float = DEFAULT_OCTMIX_ALPHA
    cutoff_hz: float = DEFAULT_OCTMIX_CUTOFF_HZ
    num_taps: Optional[int] = None
    synthetic = True

    def filter_spec(self, sample_rate_hz: float) -> FilterSpec:
        taps = self.num_taps if self.num_taps is not None else default_num_taps(sample_rate_hz)
        return FilterSpec(cutoff_hz=self.cutoff_hz, sample_rate_hz=sample_rate_hz, num_taps=taps)

    def apply(self, batch: LabeledBatch, rng: np.random.Generator) -> LabeledBatch:
        return octave_mix(batch, BetaParams(self.alpha), self.filter_spec(batch.sample_rate_hz), rng)

    def describe(self) -> str:
        return f"OctMix({float(self.alpha)}, {float(self.cutoff_hz)})"

    def to_config(self) -> Dict:
        config = {'type': 'octave_mix', 'alpha': self.alpha, 'cutoff_hz': self.cutoff_hz}
        if self.num_taps is not None:
            config['num_taps'] = self.num_taps
        return config


Step = Union[RotationStep, MixupStep, RicapStep, OctaveMixStep]

STEP_TYPES = {
    'rotation': RotationStep,
    'mixup': MixupStep,
    'ricap': RicapStep,
    'octave_mix': OctaveMixStep,
}


@dataclass(frozen=True)
class AugPolicy:
    """Steps applied in order to a copy of each selected mini-batch."""

    steps: Tuple[Step, ...] = field(default_factory=tuple)
    apply_prob: float = DEFAULT_APPLY_PROB
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, 'steps', tuple(self.steps))
        is_valid, errors = self.validate()
        if not is_valid:
            raise AugmentationError("; ".join(errors))

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if not 0.0 <= self.apply_prob <= 1.0:
            errors.append(f"apply_prob must lie in [0, 1], got {self.apply_prob}")
        synthetic = [s for s in self.steps if s.synthetic]
        if len(synthetic) > 1:
            errors.append(
                f"a policy may hold at most one synthetic step (mixup/ricap/octave_mix), got "
                f"{', '.join(s.describe() for s in synthetic)}"
            )
        for step in self.steps:
            alpha = getattr(step, 'alpha', None)
            if alpha is not None and not alpha > 0:
                errors.append(f"{step.describe()}: alpha must be positive")
            if isinstance(step, OctaveMixStep):
                if not step.cutoff_hz > 0:
                    errors.append(f"{step.describe()}: cutoff_hz must be positive")
                if step.num_taps is not None and (step.num_taps < 1 or step.num_taps % 2 == 0):
                    errors.append(f"{step.describe()}: num_taps must be a positive odd integer")
        return len(errors) == 0, errors

    def validate_for(self, num_timesteps: int, num_channels: int, sample_rate_hz: float) -> Tuple[bool, List[str]]:
        """Check the policy against a batch shape before any data flows."""
        errors = []
        for step in self.steps:
            if isinstance(step, RotationStep) and num_channels % 3 != 0:
                errors.append(f"Rotation needs a channel count divisible by 3, got {num_channels}")
            if isinstance(step, RicapStep) and num_timesteps < 2:
                errors.append(f"RICAP needs windows of at least 2 samples, got {num_timesteps}")
            if isinstance(step, OctaveMixStep):
                spec = step.filter_spec(sample_rate_hz)
                if spec.num_taps > 2 * num_timesteps:
                    errors.append(
                        f"{step.describe()}: {spec.num_taps}-tap kernel is too long for "
                        f"{num_timesteps}-sample windows"
                    )
        return len(errors) == 0, errors

    def describe(self) -> str:
        if not self.steps:
            return "None"
        return "∘".join(step.describe() for step in self.steps)

    def to_config(self) -> Dict:
        return {'steps': [s.to_config() for s in self.steps], 'apply_prob': self.apply_prob}


def augment_copy(batch: LabeledBatch, policy: AugPolicy, rng: np.random.Generator) -> LabeledBatch:
    """Run the policy's steps in order on a copy of ``batch``."""
    result = batch.copy()
    for step in policy.steps:
        result = step.apply(result, rng)
    return result


def draw_apply_coin(policy: AugPolicy, rng: np.random.Generator) -> bool:
    """One Bernoulli(apply_prob) draw per mini-batch."""
    return bool(rng.random() < policy.apply_prob)


def apply_policy(batch: LabeledBatch, policy: AugPolicy, rng: np.random.Generator) -> LabeledBatch:
    """Originals, followed by their augmented copies when the coin succeeds."""
    if not draw_apply_coin(policy, rng):
        return batch
    return concat_batches(batch, augment_copy(batch, policy, rng))


@dataclass(frozen=True)
class PolicyParams:
    """Hyper-parameters used when building the named policies."""

    mixup_alpha: float = DEFAULT_MIXUP_ALPHA
    ricap_alpha: float = DEFAULT_RICAP_ALPHA
    octmix_alpha: float = DEFAULT_OCTMIX_ALPHA
    octmix_cutoff_hz: float = DEFAULT_OCTMIX_CUTOFF_HZ
    octmix_num_taps: Optional[int] = None
    apply_prob: float = DEFAULT_APPLY_PROB


def _named_steps(name: str, params: PolicyParams) -> Tuple[Step, ...]:
    synthetic = {
        'mixup': MixupStep(params.mixup_alpha),
        'ricap': RicapStep(params.ricap_alpha),
        'octmix': OctaveMixStep(params.octmix_alpha, params.octmix_cutoff_hz, params.octmix_num_taps),
    }
    if name == 'none':
        return ()
    if name in ('rot', 'rotation'):
        return (RotationStep(),)
    if name in synthetic:
        return (synthetic[name],)
    if name.startswith('rot+') and name[4:] in synthetic:
        return (RotationStep(), synthetic[name[4:]])
    raise AugmentationError(f"Unknown policy name '{name}'; expected one of {', '.join(POLICY_NAMES)}")


POLICY_NAMES = ('none', 'rot', 'rotation', 'mixup', 'ricap', 'octmix', 'rot+mixup', 'rot+ricap', 'rot+octmix')


def build_policy(name: str, params: Optional[PolicyParams] = None) -> AugPolicy:
    """Named policy, e.g. ``rot+octmix`` = Rotation then Octave Mix(0.5, 2.1 Hz)."""
    params = params or PolicyParams()
    steps = _named_steps(name, params)
    # an empty policy never augments: the data flows through untouched
    apply_prob = params.apply_prob if steps else 0.0
    return AugPolicy(steps=steps, apply_prob=apply_prob, name=name)


def policy_from_config(config: Union[str, Dict], params: Optional[PolicyParams] = None) -> AugPolicy:
    """Policy from a name or ``{"steps": [...], "apply_prob": p}``."""
    if isinstance(config, str):
        return build_policy(config, params)
    if not isinstance(config, dict):
        raise AugmentationError(f"Policy must be a name or a mapping, got {type(config).__name__}")
    unknown = set(config) - {'steps', 'apply_prob', 'name'}
    if unknown:
        raise AugmentationError(f"Unknown policy keys: {', '.join(sorted(unknown))}")
    steps = []
    for raw in config.get('steps', []):
        if not isinstance(raw, dict) or raw.get('type') not in STEP_TYPES:
            raise AugmentationError(f"Policy step must name a type in {sorted(STEP_TYPES)}, got {raw!r}")
        kwargs = {k: v for k, v in raw.items() if k != 'type'}
        try:
            steps.append(STEP_TYPES[raw['type']](**kwargs))
        except TypeError as e:
            raise AugmentationError(f"Invalid parameters for step '{raw['type']}': {e}")
    apply_prob = config.get('apply_prob', DEFAULT_APPLY_PROB)
    return AugPolicy(steps=tuple(steps), apply_prob=float(apply_prob), name=config.get('name', ''))


def describe_policies(policies: Sequence[AugPolicy]) -> str:
    return " / ".join(p.describe() for p in policies)
