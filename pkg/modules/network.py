"""Minimal 1-D CNN with exact reverse-mode gradients.

Feature extractor: ``num_blocks`` x [conv1d (same padding, stride 1) -> ReLU ->
max-pool 2] followed by global average pooling over time. Classifier: one
affine map followed by softmax. Everything is float64; windows are laid out
(n, T, C) exactly like the augmentation batches.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from modules.errors import ShapeError

logger = logging.getLogger(__name__)

LOG_CLAMP = 1e-12
FULL_SCALE_WIDTHS = (64, 128, 256, 512, 512)


@dataclass(frozen=True)
class ModelConfig:
    num_classes: int
    channel_widths: Tuple[int, ...] = FULL_SCALE_WIDTHS
    num_blocks: Optional[int] = None
    kernel_size: int = 3
    input_channels: int = 3

    def __post_init__(self):
        object.__setattr__(self, 'channel_widths', tuple(int(w) for w in self.channel_widths))
        if self.num_blocks is None:
            object.__setattr__(self, 'num_blocks', len(self.channel_widths))
        is_valid, errors = self.validate()
        if not is_valid:
            raise ShapeError("; ".join(errors))

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if self.num_blocks < 1:
            errors.append(f"num_blocks must be >= 1, got {self.num_blocks}")
        if len(self.channel_widths) != self.num_blocks:
            errors.append(
                f"channel_widths has {len(self.channel_widths)} entries but num_blocks is {self.num_blocks}"
            )
        if any(w < 1 for w in self.channel_widths):
            errors.append(f"all channel widths must be >= 1, got {list(self.channel_widths)}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            errors.append(f"kernel_size must be a positive odd integer, got {self.kernel_size}")
        if self.num_classes < 2:
            errors.append(f"num_classes must be >= 2, got {self.num_classes}")
        if self.input_channels < 1:
            errors.append(f"input_channels must be >= 1, got {self.input_channels}")
        return len(errors) == 0, errors

    @property
    def feature_dim(self) -> int:
        return self.channel_widths[-1]

    @property
    def min_timesteps(self) -> int:
        return 2 ** self.num_blocks

    def to_dict(self) -> Dict:
        return {
            'num_classes': self.num_classes,
            'channel_widths': list(self.channel_widths),
            'num_blocks': self.num_blocks,
            'kernel_size': self.kernel_size,
            'input_channels': self.input_channels,
        }


def he_uniform(shape: Tuple[int, ...], fan_in: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


# Layer kernels

def conv1d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Same-padded stride-1 correlation; weight shaped (k, C_in, C_out)."""
    k = weight.shape[0]
    pad = k // 2
    padded = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
    patches = sliding_window_view(padded, k, axis=1)  # (n, T, C_in, k)
    out = np.tensordot(patches, weight, axes=([3, 2], [0, 1])) + bias
    return out, patches


def conv1d_backward(dout: np.ndarray, patches: np.ndarray, weight: np.ndarray,
                    need_input_grad: bool) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    k = weight.shape[0]
    pad = k // 2
    dweight = np.tensordot(patches, dout, axes=([0, 1], [0, 1])).transpose(1, 0, 2)
    dbias = dout.sum(axis=(0, 1))
    if not need_input_grad:
        return dweight, dbias, None
    n, length, _ = dout.shape
    dpadded = np.zeros((n, length + 2 * pad, weight.shape[1]))
    for j in range(k):
        dpadded[:, j:j + length, :] += dout @ weight[j].T
    return dweight, dbias, dpadded[:, pad:pad + length, :]


def maxpool2_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Width-2 stride-2 max pooling over time; an odd trailing sample is dropped."""
    n, length, channels = x.shape
    half = length // 2
    pairs = x[:, :2 * half, :].reshape(n, half, 2, channels)
    argmax = pairs.argmax(axis=2)
    out = np.take_along_axis(pairs, argmax[:, :, None, :], axis=2)[:, :, 0, :]
    return out, argmax


def maxpool2_backward(dout: np.ndarray, argmax: np.ndarray, input_length: int) -> np.ndarray:
    n, half, channels = dout.shape
    dpairs = np.zeros((n, half, 2, channels))
    np.put_along_axis(dpairs, argmax[:, :, None, :], dout[:, :, None, :], axis=2)
    dx = np.zeros((n, input_length, channels))
    dx[:, :2 * half, :] = dpairs.reshape(n, 2 * half, channels)
    return dx


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


# Modules

class FeatureExtractor:
    """Stack of conv blocks followed by global average pooling."""

    def __init__(self, config: ModelConfig, params: Dict[str, np.ndarray], frozen: bool = False):
        self.config = config
        self.params = params
        self.frozen = frozen

    @classmethod
    def initialize(cls, config: ModelConfig, rng: np.random.Generator) -> 'FeatureExtractor':
        params = {}
        in_channels = config.input_channels
        for i, width in enumerate(config.channel_widths):
            fan_in = config.kernel_size * in_channels
            params[f"block{i}.weight"] = he_uniform((config.kernel_size, in_channels, width), fan_in, rng)
            params[f"block{i}.bias"] = np.zeros(width)
            in_channels = width
        return cls(config, params)

    @property
    def feature_dim(self) -> int:
        return self.config.feature_dim

    def check_input(self, x: np.ndarray):
        if x.ndim != 3:
            raise ShapeError(f"Extractor input must be shaped (n, T, C), got {x.shape}")
        if x.shape[2] != self.config.input_channels:
            raise ShapeError(f"Extractor expects {self.config.input_channels} channels, got {x.shape[2]}")
        if x.shape[1] < self.config.min_timesteps:
            raise ShapeError(
                f"Windows of {x.shape[1]} samples are too short for {self.config.num_blocks} pooling "
                f"stages; the minimum T is {self.config.min_timesteps}"
            )

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, List[Tuple]]:
        x = np.asarray(x, dtype=np.float64)
        self.check_input(x)
        caches = []
        h = x
        for i in range(self.config.num_blocks):
            pre, patches = conv1d_forward(h, self.params[f"block{i}.weight"], self.params[f"block{i}.bias"])
            active = np.maximum(pre, 0.0)
            pooled, argmax = maxpool2_forward(active)
            caches.append((patches, pre > 0, argmax, pre.shape[1]))
            h = pooled
        features = h.mean(axis=1)
        caches.append(h.shape[1])
        return features, caches

    def backward(self, dfeatures: np.ndarray, caches: List[Tuple]) -> Dict[str, np.ndarray]:
        pooled_length = caches[-1]
        dh = np.repeat(dfeatures[:, None, :] / pooled_length, pooled_length, axis=1)
        grads = {}
        for i in reversed(range(self.config.num_blocks)):
            patches, mask, argmax, length = caches[i]
            dactive = maxpool2_backward(dh, argmax, length)
            dpre = dactive * mask
            dweight, dbias, dh = conv1d_backward(dpre, patches, self.params[f"block{i}.weight"],
                                                 need_input_grad=i > 0)
            grads[f"block{i}.weight"] = dweight
            grads[f"block{i}.bias"] = dbias
        return grads

    def clone(self) -> 'FeatureExtractor':
        return FeatureExtractor(self.config, {k: v.copy() for k, v in self.params.items()}, self.frozen)


class Classifier:
    """Single affine map ``in_dim -> num_classes`` followed by softmax."""

    def __init__(self, params: Dict[str, np.ndarray], frozen: bool = False):
        self.params = params
        self.frozen = frozen

    @classmethod
    def initialize(cls, in_dim: int, num_classes: int, rng: np.random.Generator) -> 'Classifier':
        return cls({
            'weight': he_uniform((in_dim, num_classes), in_dim, rng),
            'bias': np.zeros(num_classes),
        })

    @property
    def in_dim(self) -> int:
        return int(self.params['weight'].shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.params['weight'].shape[1])

    def forward(self, features: np.ndarray) -> np.ndarray:
        if features.ndim != 2 or features.shape[1] != self.in_dim:
            raise ShapeError(f"Classifier expects features of width {self.in_dim}, got shape {features.shape}")
        return features @ self.params['weight'] + self.params['bias']

    def backward(self, dlogits: np.ndarray, features: np.ndarray) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
        grads = {'weight': features.T @ dlogits, 'bias': dlogits.sum(axis=0)}
        return grads, dlogits @ self.params['weight'].T

    def clone(self) -> 'Classifier':
        return Classifier({k: v.copy() for k, v in self.params.items()}, self.frozen)


def forward_features(extractor: FeatureExtractor, windows) -> np.ndarray:
    """(n, feature_dim) features for a batch or a raw (n, T, C) array."""
    windows = getattr(windows, 'windows', windows)
    features, _ = extractor.forward(windows)
    return features


def forward_logits(classifier: Classifier, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Logits and softmax probabilities."""
    logits = classifier.forward(np.asarray(features, dtype=np.float64))
    return logits, softmax(logits)


def soft_cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean over the batch of -sum_k t_k log p_k, log clamped at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape or probs.ndim != 2:
        raise ShapeError(f"Probabilities {probs.shape} and targets {targets.shape} must share an (n, K) shape")
    return float(-(targets * np.log(np.maximum(probs, LOG_CLAMP))).sum(axis=1).mean())


def soft_cross_entropy_grad(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """d loss / d logits = (p - t) / n for rows of ``targets`` on the simplex."""
    return (probs - targets) / probs.shape[0]


@dataclass
class ForwardPass:
    inputs: List[np.ndarray]
    features: List[np.ndarray]
    caches: List[Optional[List]]
    combined: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


@dataclass
class Network:
    """Extractors whose features are concatenated (branch order) into one classifier."""

    extractors: List[FeatureExtractor]
    classifier: Classifier
    prefixes: List[str] = field(default_factory=list)
    classifier_prefix: str = "classifier"

    def __post_init__(self):
        if not self.prefixes:
            self.prefixes = [f"extractor{k}" for k in range(len(self.extractors))]
        expected = sum(e.feature_dim for e in self.extractors)
        if expected != self.classifier.in_dim:
            raise ShapeError(
                f"Classifier input width {self.classifier.in_dim} does not match the "
                f"{len(self.extractors)} concatenated feature maps (width {expected})"
            )

    def _split_inputs(self, inputs) -> List[np.ndarray]:
        if isinstance(inputs, np.ndarray):
            return [inputs] * len(self.extractors)
        inputs = list(inputs)
        if len(inputs) != len(self.extractors):
            raise ShapeError(f"Expected {len(self.extractors)} input arrays, got {len(inputs)}")
        if len({x.shape[0] for x in inputs}) != 1:
            raise ShapeError("Every branch input must hold the same number of windows")
        return inputs

    def forward(self, inputs: Union[np.ndarray, Sequence[np.ndarray]], keep_caches: bool = True) -> ForwardPass:
        branch_inputs = self._split_inputs(inputs)
        features, caches = [], []
        for extractor, x in zip(self.extractors, branch_inputs):
            feats, cache = extractor.forward(x)
            features.append(feats)
            caches.append(cache if keep_caches and not extractor.frozen else None)
        combined = np.concatenate(features, axis=1)
        logits, probs = forward_logits(self.classifier, combined)
        return ForwardPass(branch_inputs, features, caches, combined, logits, probs)

    def predict_proba(self, inputs) -> np.ndarray:
        return self.forward(inputs, keep_caches=False).probs

    def named_parameters(self, trainable_only: bool = True) -> Dict[str, np.ndarray]:
        named = {}
        for prefix, extractor in zip(self.prefixes, self.extractors):
            if trainable_only and extractor.frozen:
                continue
            for name, value in extractor.params.items():
                named[f"{prefix}.{name}"] = value
        if not (trainable_only and self.classifier.frozen):
            for name, value in self.classifier.params.items():
                named[f"{self.classifier_prefix}.{name}"] = value
        return named

    def backward(self, forward: ForwardPass, targets: np.ndarray) -> Dict[str, np.ndarray]:
        """Gradients of the soft cross-entropy for every non-frozen parameter."""
        dlogits = soft_cross_entropy_grad(forward.probs, targets)
        classifier_grads, dcombined = self.classifier.backward(dlogits, forward.combined)
        grads = {}
        if not self.classifier.frozen:
            grads.update({f"{self.classifier_prefix}.{k}": v for k, v in classifier_grads.items()})
        offset = 0
        for prefix, extractor, cache in zip(self.prefixes, self.extractors, forward.caches):
            width = extractor.feature_dim
            if not extractor.frozen:
                branch_grads = extractor.backward(dcombined[:, offset:offset + width], cache)
                grads.update({f"{prefix}.{k}": v for k, v in branch_grads.items()})
            offset += width
        return grads

    def loss_and_gradients(self, inputs, targets: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
        forward = self.forward(inputs)
        targets = np.asarray(targets, dtype=np.float64)
        loss = soft_cross_entropy(forward.probs, targets)
        return loss, self.backward(forward, targets)


def backward(model: Network, batch) -> Tuple[float, Dict[str, np.ndarray]]:
    """Loss and exact gradients of ``model`` on a labeled batch."""
    return model.loss_and_gradients(batch.windows, batch.labels)
