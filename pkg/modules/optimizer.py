"""Adam optimizer state and weight freezing."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Union

import numpy as np

from modules.errors import FreezeContractError, ShapeError
from modules.network import Classifier, FeatureExtractor

logger = logging.getLogger(__name__)

DEFAULT_LEARNING_RATE = 0.001


@dataclass
class AdamState:
    """Per-parameter moment accumulators keyed by parameter name."""

    lr: float = DEFAULT_LEARNING_RATE
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_step(state: AdamState, params: Dict[str, np.ndarray],
              grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """Bias-corrected Adam update, in place, for every parameter named in ``grads``.

    Parameters without a gradient (frozen ones) are left untouched.
    """
    for name, grad in grads.items():
        if name not in params:
            raise ShapeError(f"Gradient for unknown parameter '{name}'")
        if params[name].shape != grad.shape:
            raise ShapeError(f"Gradient for '{name}' has shape {grad.shape}, parameter has {params[name].shape}")
        if not params[name].flags.writeable:
            raise FreezeContractError(f"Parameter '{name}' is frozen and cannot be updated")

    state.step += 1
    bias1 = 1.0 - state.beta1 ** state.step
    bias2 = 1.0 - state.beta2 ** state.step
    for name in sorted(grads):
        grad = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * (grad * grad)
        m_hat = m / bias1
        v_hat = v / bias2
        params[name] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


Freezable = Union[FeatureExtractor, Classifier]


def freeze(module: Freezable) -> Freezable:
    """Mark every parameter of ``module`` non-trainable; forward output is unchanged."""
    module.frozen = True
    for value in module.params.values():
        value.flags.writeable = False
    logger.debug(f"Froze {type(module).__name__} ({len(module.params)} tensors)")
    return module


def is_frozen(module: Freezable) -> bool:
    return bool(module.frozen)
