"""JSON run configuration: parsing, flag overrides and total validation.

Every problem in a config is collected and reported together in one
``ConfigError`` before any data is loaded or any model is trained. The schema
is documented in ``configs/SCHEMA.md``.
"""

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from config.presets import DATASET_PRESETS, DEFAULT_SWEEP_ALPHAS, DEFAULT_SWEEP_CUTOFFS_HZ, MODEL_SCALES
from config.settings import settings
from dataset.synthetic import SynthSpec
from dataset.windowing import WindowingSpec
from modules.ensemble import DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS
from modules.errors import ConfigError, OctmixError
from modules.experiments import DEFAULT_VARIANT, Variant, resolve_variant
from modules.filters import FilterSpec
from modules.network import ModelConfig
from modules.optimizer import DEFAULT_LEARNING_RATE
from modules.policies import AugPolicy, PolicyParams, policy_from_config

logger = logging.getLogger(__name__)

COMMANDS = ('gen-synth', 'augment', 'train', 'eval', 'sweep', 'inspect-filter')
SOURCES = ('synthetic', 'csv')
SWEEP_METHODS = ('rot+octmix', 'rot+mixup', 'rot+ricap')

TOP_LEVEL_KEYS = {'seed', 'trials', 'output_dir', 'workers', 'variant', 'data', 'model', 'train',
                  'policy_params', 'augment', 'sweep', 'filter', 'eval'}
SECTION_KEYS = {
    'data': {'preset', 'source', 'manifest', 'class_names', 'num_classes', 'synth', 'windowing', 'split'},
    'data.synth': {'num_classes', 'subjects', 'recordings_per_subject', 'duration_s', 'sample_rate_hz',
                   'base_freqs_hz', 'amplitudes', 'harmonic_weights', 'noise_level', 'gain_jitter',
                   'phase_jitter'},
    'data.windowing': {'frame', 'stride', 'trim_s'},
    'data.split': {'train', 'valid', 'test'},
    'model': {'scale', 'channel_widths', 'kernel_size'},
    'train': {'pretrain_epochs', 'classifier_epochs', 'batch_size', 'lr', 'save_model', 'excel'},
    'policy_params': {'mixup_alpha', 'ricap_alpha', 'octmix_alpha', 'octmix_cutoff_hz', 'octmix_num_taps',
                      'apply_prob'},
    'augment': {'policy', 'max_windows'},
    'sweep': {'methods', 'alphas', 'cutoffs_hz'},
    'filter': {'cutoff_hz', 'sample_rate_hz', 'num_taps', 'response_points'},
    'eval': {'model_dir', 'split', 'trial', 'n_train_subjects'},
}

DEFAULT_OUTPUT_DIR = 'runs/default'
SYNTHETIC_CHANNELS = 3


@dataclass(frozen=True)
class DataConfig:
    source: str
    manifest: Optional[Path]
    class_names: Optional[Tuple[str, ...]]
    num_classes: int
    synth: SynthSpec
    windowing: WindowingSpec
    train_counts: Tuple[int, ...]
    n_valid_subjects: int
    n_test_subjects: int
    preset: Optional[str] = None


@dataclass(frozen=True)
class ModelSection:
    channel_widths: Tuple[int, ...]
    kernel_size: int = 3

    def model_config(self, num_classes: int, input_channels: int) -> ModelConfig:
        return ModelConfig(num_classes=num_classes, channel_widths=self.channel_widths,
                           kernel_size=self.kernel_size, input_channels=input_channels)


@dataclass(frozen=True)
class TrainSection:
    pretrain_epochs: int = DEFAULT_EPOCHS
    classifier_epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    lr: float = DEFAULT_LEARNING_RATE
    save_model: bool = True
    excel: bool = True


@dataclass(frozen=True)
class SweepConfig:
    methods: Tuple[str, ...] = ('rot+octmix',)
    alphas: Tuple[float, ...] = DEFAULT_SWEEP_ALPHAS
    cutoffs_hz: Tuple[float, ...] = DEFAULT_SWEEP_CUTOFFS_HZ

    def cells(self) -> List[Tuple[str, float, Optional[float]]]:
        """(method, alpha, cutoff) per grid cell; cutoff only applies to Octave Mix."""
        cells = []
        for method in self.methods:
            for alpha in self.alphas:
                if method == 'rot+octmix':
                    cells.extend((method, alpha, cutoff) for cutoff in self.cutoffs_hz)
                else:
                    cells.append((method, alpha, None))
        return cells


@dataclass(frozen=True)
class FilterSection:
    cutoff_hz: float = 2.1
    sample_rate_hz: float = 100.0
    num_taps: Optional[int] = None
    response_points: int = 512

    def filter_spec(self) -> FilterSpec:
        return FilterSpec(self.cutoff_hz, self.sample_rate_hz, self.num_taps)


@dataclass(frozen=True)
class EvalSection:
    model_dir: Optional[Path] = None
    split: str = 'test'
    trial: Optional[int] = None
    n_train_subjects: Optional[int] = None


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int
    trials: int
    output_dir: Path
    workers: int
    variant: Variant
    data: DataConfig
    model: ModelSection
    train: TrainSection
    policy_params: PolicyParams
    augment_policy: AugPolicy
    max_windows: Optional[int]
    sweep: SweepConfig
    filter: FilterSection
    eval: EvalSection
    raw: Dict = field(default_factory=dict, repr=False)

    @property
    def sample_rate_hz(self) -> float:
        return self.data.synth.sample_rate_hz


# Overrides

def parse_override_value(text: str) -> Any:
    """JSON literal when it parses, otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: Dict, overrides: Sequence[str]) -> Dict:
    """Apply ``dotted.key=value`` flags to a copy of ``raw``."""
    result = copy.deepcopy(raw)
    errors = []
    for item in overrides:
        if '=' not in item:
            errors.append(f"override '{item}' must look like dotted.key=value")
            continue
        key, value = item.split('=', 1)
        parts = [p for p in key.strip().split('.') if p]
        if not parts:
            errors.append(f"override '{item}' has an empty key")
            continue
        node = result
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                errors.append(f"override '{item}': '{part}' is not a section")
                break
            node = child
        else:
            node[parts[-1]] = parse_override_value(value)
    if errors:
        raise ConfigError(errors)
    return result


def read_config_file(path) -> Dict:
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"])
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be a JSON object"])
    return raw


# Parsing helpers

class _Collector:
    """Typed lookups that record problems instead of raising."""

    def __init__(self):
        self.errors: List[str] = []

    def _null(self, default, path: str, expected: str):
        """Explicit null is only accepted where the key is optional."""
        if default is not None:
            self.errors.append(f"{path}: expected {expected}, got null")
        return default

    def section(self, raw: Dict, name: str) -> Dict:
        node = raw
        for part in name.split('.'):
            node = node.get(part, {}) if isinstance(node, dict) else {}
        if not isinstance(node, dict):
            self.errors.append(f"{name}: must be an object")
            return {}
        unknown = sorted(set(node) - SECTION_KEYS[name])
        for key in unknown:
            self.errors.append(f"{name}.{key}: unknown key")
        return node

    def integer(self, node: Dict, key: str, default, path: str, minimum: Optional[int] = None):
        value = node.get(key, default)
        if value is None:
            return self._null(default, path, "an integer")
        if isinstance(value, bool) or not isinstance(value, int):
            self.errors.append(f"{path}: expected an integer, got {value!r}")
            return default
        if minimum is not None and value < minimum:
            self.errors.append(f"{path}: must be >= {minimum}, got {value}")
        return value

    def number(self, node: Dict, key: str, default, path: str, positive: bool = False,
               nonnegative: bool = False):
        value = node.get(key, default)
        if value is None:
            return self._null(default, path, "a number")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.errors.append(f"{path}: expected a number, got {value!r}")
            return default
        if positive and not value > 0:
            self.errors.append(f"{path}: must be positive, got {value}")
        if nonnegative and value < 0:
            self.errors.append(f"{path}: must be >= 0, got {value}")
        return float(value)

    def numbers(self, node: Dict, key: str, default, path: str, positive: bool = False):
        value = node.get(key, default)
        if value is None:
            return self._null(default, path, "a non-empty list of numbers")
        if not isinstance(value, (list, tuple)) or not value:
            self.errors.append(f"{path}: expected a non-empty list of numbers")
            return default
        result = []
        for item in value:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                self.errors.append(f"{path}: expected numbers, got {item!r}")
                return default
            if positive and not item > 0:
                self.errors.append(f"{path}: values must be positive, got {item}")
            result.append(float(item))
        return tuple(result)

    def boolean(self, node: Dict, key: str, default: bool, path: str) -> bool:
        value = node.get(key, default)
        if not isinstance(value, bool):
            self.errors.append(f"{path}: expected true or false, got {value!r}")
            return default
        return value

    def absorb(self, label: str, validation: Tuple[bool, List[str]]):
        is_valid, errors = validation
        if not is_valid:
            self.errors.extend(f"{label}: {e}" for e in errors)


def _parse_data(raw: Dict, c: _Collector, seed: int) -> DataConfig:
    data = c.section(raw, 'data')
    preset_name = data.get('preset')
    preset = None
    if preset_name is not None:
        if preset_name not in DATASET_PRESETS:
            c.errors.append(f"data.preset: unknown preset '{preset_name}', expected one of "
                            f"{', '.join(DATASET_PRESETS)}")
        else:
            preset = DATASET_PRESETS[preset_name]

    source = data.get('source', 'synthetic')
    if source not in SOURCES:
        c.errors.append(f"data.source: expected one of {', '.join(SOURCES)}, got {source!r}")
        source = 'synthetic'
    manifest = data.get('manifest')
    if source == 'csv' and not manifest:
        c.errors.append("data.manifest: required when data.source is 'csv'")
    class_names = data.get('class_names')
    if class_names is not None and (not isinstance(class_names, list)
                                    or not all(isinstance(n, str) for n in class_names)):
        c.errors.append("data.class_names: expected a list of strings")
        class_names = None

    synth_raw = c.section(raw, 'data.synth')
    default_classes = preset.num_classes if preset else 3
    default_rate = preset.sample_rate_hz if preset else 100.0
    synth_classes = c.integer(synth_raw, 'num_classes', default_classes, 'data.synth.num_classes', 2)
    synth_kwargs = {
        'num_classes': synth_classes,
        'subjects': c.integer(synth_raw, 'subjects', 30, 'data.synth.subjects', 1),
        'recordings_per_subject': c.integer(synth_raw, 'recordings_per_subject', 1,
                                            'data.synth.recordings_per_subject', 1),
        'duration_s': c.number(synth_raw, 'duration_s', 30.0, 'data.synth.duration_s', positive=True),
        'sample_rate_hz': c.number(synth_raw, 'sample_rate_hz', default_rate, 'data.synth.sample_rate_hz',
                                   positive=True),
        'noise_level': c.number(synth_raw, 'noise_level', 0.05, 'data.synth.noise_level', nonnegative=True),
        'gain_jitter': c.number(synth_raw, 'gain_jitter', 0.1, 'data.synth.gain_jitter', nonnegative=True),
        'phase_jitter': c.number(synth_raw, 'phase_jitter', 3.141592653589793, 'data.synth.phase_jitter',
                                 nonnegative=True),
        'seed': seed,
    }
    for key in ('base_freqs_hz', 'amplitudes', 'harmonic_weights'):
        synth_kwargs[key] = c.numbers(synth_raw, key, None, f'data.synth.{key}')
    synth = SynthSpec(**synth_kwargs)
    if source == 'synthetic':
        c.absorb('data.synth', synth.validate())

    win_raw = c.section(raw, 'data.windowing')
    windowing = WindowingSpec(
        frame=c.integer(win_raw, 'frame', preset.frame if preset else 256, 'data.windowing.frame', 1),
        stride=c.integer(win_raw, 'stride', preset.stride if preset else 256, 'data.windowing.stride', 1),
        trim_s=c.number(win_raw, 'trim_s', preset.trim_s if preset else 0.0, 'data.windowing.trim_s',
                        nonnegative=True),
    )

    split_raw = c.section(raw, 'data.split')
    train_raw = split_raw.get('train', preset.n_train_subjects if preset else 20)
    train_list = train_raw if isinstance(train_raw, list) else [train_raw]
    train_counts = []
    for count in train_list:
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            c.errors.append(f"data.split.train: subject counts must be positive integers, got {count!r}")
        else:
            train_counts.append(count)
    if not train_list:
        c.errors.append("data.split.train: list must not be empty")
    n_valid = c.integer(split_raw, 'valid', preset.n_valid_subjects if preset else 5, 'data.split.valid', 0)
    n_test = c.integer(split_raw, 'test', preset.n_test_subjects if preset else 5, 'data.split.test', 1)

    if source == 'synthetic':
        num_classes = c.integer(data, 'num_classes', synth_classes, 'data.num_classes', 2)
        if num_classes != synth_classes:
            c.errors.append(f"data.num_classes ({num_classes}) must equal data.synth.num_classes ({synth_classes})")
        if preset is not None and preset.channels != SYNTHETIC_CHANNELS:
            c.errors.append(f"data.preset: '{preset.name}' has {preset.channels} channels but synthetic "
                            f"corpora have {SYNTHETIC_CHANNELS}")
    else:
        default = len(class_names) if class_names else (preset.num_classes if preset else None)
        num_classes = c.integer(data, 'num_classes', default, 'data.num_classes', 2)
        if num_classes is None:
            c.errors.append("data.num_classes: required for csv corpora without class_names or a preset")
            num_classes = 2
        elif class_names and len(class_names) != num_classes:
            c.errors.append(f"data.class_names has {len(class_names)} entries but data.num_classes is {num_classes}")

    return DataConfig(
        source=source,
        manifest=Path(manifest) if manifest else None,
        class_names=tuple(class_names) if class_names else None,
        num_classes=num_classes,
        synth=synth,
        windowing=windowing,
        train_counts=tuple(train_counts) or (1,),
        n_valid_subjects=n_valid if n_valid is not None else 0,
        n_test_subjects=n_test if n_test is not None else 1,
        preset=preset.name if preset else None,
    )


def _parse_model(raw: Dict, c: _Collector) -> ModelSection:
    model = c.section(raw, 'model')
    scale = model.get('scale', 'full')
    if scale not in MODEL_SCALES:
        c.errors.append(f"model.scale: expected one of {', '.join(MODEL_SCALES)}, got {scale!r}")
        scale = 'full'
    widths = model.get('channel_widths', list(MODEL_SCALES[scale]))
    if (not isinstance(widths, list) or not widths
            or not all(isinstance(w, int) and not isinstance(w, bool) and w >= 1 for w in widths)):
        c.errors.append(f"model.channel_widths: expected a non-empty list of positive integers, got {widths!r}")
        widths = list(MODEL_SCALES[scale])
    kernel_size = c.integer(model, 'kernel_size', 3, 'model.kernel_size', 1)
    if kernel_size is not None and kernel_size % 2 == 0:
        c.errors.append(f"model.kernel_size: must be odd, got {kernel_size}")
    return ModelSection(tuple(widths), kernel_size or 3)


def _parse_train(raw: Dict, c: _Collector) -> TrainSection:
    train = c.section(raw, 'train')
    return TrainSection(
        pretrain_epochs=c.integer(train, 'pretrain_epochs', DEFAULT_EPOCHS, 'train.pretrain_epochs', 0),
        classifier_epochs=c.integer(train, 'classifier_epochs', DEFAULT_EPOCHS, 'train.classifier_epochs', 0),
        batch_size=c.integer(train, 'batch_size', DEFAULT_BATCH_SIZE, 'train.batch_size', 1),
        lr=c.number(train, 'lr', DEFAULT_LEARNING_RATE, 'train.lr', positive=True),
        save_model=c.boolean(train, 'save_model', True, 'train.save_model'),
        excel=c.boolean(train, 'excel', True, 'train.excel'),
    )


def _parse_policy_params(raw: Dict, c: _Collector) -> PolicyParams:
    node = c.section(raw, 'policy_params')
    defaults = PolicyParams()
    taps = c.integer(node, 'octmix_num_taps', None, 'policy_params.octmix_num_taps', 1)
    if taps is not None and taps % 2 == 0:
        c.errors.append(f"policy_params.octmix_num_taps: must be odd, got {taps}")
    apply_prob = c.number(node, 'apply_prob', defaults.apply_prob, 'policy_params.apply_prob', nonnegative=True)
    if apply_prob is not None and apply_prob > 1:
        c.errors.append(f"policy_params.apply_prob: must lie in [0, 1], got {apply_prob}")
    return PolicyParams(
        mixup_alpha=c.number(node, 'mixup_alpha', defaults.mixup_alpha, 'policy_params.mixup_alpha', positive=True),
        ricap_alpha=c.number(node, 'ricap_alpha', defaults.ricap_alpha, 'policy_params.ricap_alpha', positive=True),
        octmix_alpha=c.number(node, 'octmix_alpha', defaults.octmix_alpha, 'policy_params.octmix_alpha',
                              positive=True),
        octmix_cutoff_hz=c.number(node, 'octmix_cutoff_hz', defaults.octmix_cutoff_hz,
                                  'policy_params.octmix_cutoff_hz', positive=True),
        octmix_num_taps=taps,
        apply_prob=apply_prob,
    )


def _parse_sweep(raw: Dict, c: _Collector) -> SweepConfig:
    node = c.section(raw, 'sweep')
    defaults = SweepConfig()
    methods = node.get('methods', list(defaults.methods))
    if not isinstance(methods, list) or not methods:
        c.errors.append("sweep.methods: expected a non-empty list")
        methods = list(defaults.methods)
    for method in methods:
        if method not in SWEEP_METHODS:
            c.errors.append(f"sweep.methods: unknown method {method!r}, expected {', '.join(SWEEP_METHODS)}")
    return SweepConfig(
        methods=tuple(m for m in methods if m in SWEEP_METHODS) or defaults.methods,
        alphas=c.numbers(node, 'alphas', defaults.alphas, 'sweep.alphas', positive=True),
        cutoffs_hz=c.numbers(node, 'cutoffs_hz', defaults.cutoffs_hz, 'sweep.cutoffs_hz', positive=True),
    )


def _parse_filter(raw: Dict, c: _Collector, sample_rate_hz: float) -> FilterSection:
    node = c.section(raw, 'filter')
    section = FilterSection(
        cutoff_hz=c.number(node, 'cutoff_hz', 2.1, 'filter.cutoff_hz', positive=True),
        sample_rate_hz=c.number(node, 'sample_rate_hz', sample_rate_hz, 'filter.sample_rate_hz', positive=True),
        num_taps=c.integer(node, 'num_taps', None, 'filter.num_taps', 1),
        response_points=c.integer(node, 'response_points', 512, 'filter.response_points', 2),
    )
    c.absorb('filter', section.filter_spec().validate())
    return section


def _parse_eval(raw: Dict, c: _Collector, command: str) -> EvalSection:
    node = c.section(raw, 'eval')
    model_dir = node.get('model_dir')
    if command == 'eval' and not model_dir:
        c.errors.append("eval.model_dir: required for the eval command")
    split = node.get('split', 'test')
    if split not in ('train', 'valid', 'test'):
        c.errors.append(f"eval.split: expected train, valid or test, got {split!r}")
    return EvalSection(
        model_dir=Path(model_dir) if model_dir else None,
        split=split,
        trial=c.integer(node, 'trial', None, 'eval.trial', 0),
        n_train_subjects=c.integer(node, 'n_train_subjects', None, 'eval.n_train_subjects', 1),
    )


def parse_run_config(raw: Dict, command: str = 'train') -> RunConfig:
    """Validate ``raw`` completely and build the typed config, or raise ConfigError."""
    c = _Collector()
    if command not in COMMANDS:
        c.errors.append(f"unknown command '{command}'")
    for key in sorted(set(raw) - TOP_LEVEL_KEYS):
        c.errors.append(f"{key}: unknown key")

    seed = c.integer(raw, 'seed', 0, 'seed', 0)
    trials = c.integer(raw, 'trials', 1, 'trials', 1)
    workers = c.integer(raw, 'workers', settings.workers, 'workers', 1)
    output_dir = settings.output_dir or Path(raw.get('output_dir', DEFAULT_OUTPUT_DIR))

    data = _parse_data(raw, c, seed or 0)
    model = _parse_model(raw, c)
    train = _parse_train(raw, c)
    policy_params = _parse_policy_params(raw, c)
    sweep = _parse_sweep(raw, c)
    filter_section = _parse_filter(raw, c, data.synth.sample_rate_hz)
    eval_section = _parse_eval(raw, c, command)

    variant = None
    try:
        variant = resolve_variant(raw.get('variant', DEFAULT_VARIANT))
    except OctmixError as e:
        c.errors.append(f"variant: {e}")

    augment = c.section(raw, 'augment')
    augment_policy = None
    max_windows = c.integer(augment, 'max_windows', None, 'augment.max_windows', 1)
    policies: List[AugPolicy] = []
    try:
        augment_policy = policy_from_config(augment.get('policy', 'rot+octmix'), policy_params)
        if command == 'augment':
            policies.append(augment_policy)
    except (OctmixError, TypeError, ValueError) as e:
        c.errors.append(f"augment.policy: {e}")
    if variant is not None and command in ('train', 'eval'):
        try:
            policies.extend(variant.build_policies(policy_params))
        except (OctmixError, TypeError, ValueError) as e:
            c.errors.append(f"variant: {e}")

    # shape checks that need no data: synthetic corpora have known geometry
    frame = data.windowing.frame
    channels = SYNTHETIC_CHANNELS if data.source == 'synthetic' else None
    if 2 ** len(model.channel_widths) > frame:
        c.errors.append(f"model: {len(model.channel_widths)} pooling stages need windows of at least "
                        f"{2 ** len(model.channel_widths)} samples, data.windowing.frame is {frame}")
    if data.source == 'synthetic':
        for policy in policies:
            c.absorb(f"policy {policy.describe()}",
                     policy.validate_for(frame, channels, data.synth.sample_rate_hz))
    if command in ('train', 'eval', 'sweep') and data.source == 'synthetic':
        needed = max(data.train_counts) + data.n_valid_subjects + data.n_test_subjects
        if needed > data.synth.subjects:
            c.errors.append(f"data.split: needs {needed} subjects but data.synth.subjects is {data.synth.subjects}")
    if command == 'sweep' and data.n_valid_subjects < 1:
        c.errors.append("data.split.valid: the sweep selects cells by validation accuracy and needs >= 1 subject")
    if command == 'sweep' and train.pretrain_epochs < 1:
        c.errors.append("train.pretrain_epochs: the sweep reads validation accuracy per epoch and needs >= 1 epoch")
    if command == 'train' and variant is not None and variant.kind != 'plain' and train.pretrain_epochs == 0:
        logger.warning("train.pretrain_epochs is 0: branches keep their initial weights")

    if c.errors:
        raise ConfigError(c.errors)
    return RunConfig(
        command=command, seed=seed, trials=trials, output_dir=Path(output_dir), workers=workers,
        variant=variant, data=data, model=model, train=train, policy_params=policy_params,
        augment_policy=augment_policy, max_windows=max_windows, sweep=sweep, filter=filter_section,
        eval=eval_section, raw=raw,
    )


def load_run_config(path, command: str = 'train', overrides: Sequence[str] = ()) -> RunConfig:
    raw = apply_overrides(read_config_file(path), overrides) if path else apply_overrides({}, overrides)
    config = parse_run_config(raw, command)
    logger.debug(f"Loaded {command} config from {path or '<defaults>'}")
    return config
