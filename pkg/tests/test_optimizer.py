import numpy as np
import pytest

from modules.errors import FreezeContractError, ShapeError
from modules.network import Classifier, FeatureExtractor
from modules.optimizer import AdamState, adam_step, freeze, is_frozen


def test_first_step_moves_by_the_learning_rate():
    params = {'w': np.array([1.0, -2.0, 0.5])}
    adam_step(AdamState(), params, {'w': np.array([0.3, -4.0, 1e-3])})
    np.testing.assert_allclose(params['w'], [1.0 - 0.001, -2.0 + 0.001, 0.5 - 0.001], rtol=1e-6)


def test_zero_gradient_leaves_parameters_unchanged():
    params = {'w': np.array([1.0, 2.0])}
    state = AdamState()
    for _ in range(3):
        adam_step(state, params, {'w': np.zeros(2)})
    np.testing.assert_array_equal(params['w'], [1.0, 2.0])
    assert state.step == 3


def test_updates_are_deterministic():
    grads = [{'w': np.array([0.1, -0.2]), 'b': np.array([0.5])}, {'w': np.array([-0.3, 0.4]), 'b': np.array([0.0])}]
    results = []
    for _ in range(2):
        params = {'w': np.zeros(2), 'b': np.ones(1)}
        state = AdamState(lr=0.01)
        for g in grads:
            adam_step(state, params, g)
        results.append(params)
    np.testing.assert_array_equal(results[0]['w'], results[1]['w'])
    np.testing.assert_array_equal(results[0]['b'], results[1]['b'])


def test_parameters_without_gradients_are_untouched():
    params = {'w': np.ones(2), 'frozen': np.ones(2)}
    adam_step(AdamState(), params, {'w': np.ones(2)})
    np.testing.assert_array_equal(params['frozen'], np.ones(2))


def test_gradient_shape_must_match():
    with pytest.raises(ShapeError):
        adam_step(AdamState(), {'w': np.ones(2)}, {'w': np.ones(3)})
    with pytest.raises(ShapeError):
        adam_step(AdamState(), {'w': np.ones(2)}, {'v': np.ones(2)})


def test_frozen_parameters_cannot_be_stepped(tiny_model_config):
    extractor = FeatureExtractor.initialize(tiny_model_config, np.random.default_rng(0))
    freeze(extractor)
    assert is_frozen(extractor)
    grads = {name: np.ones_like(value) for name, value in extractor.params.items()}
    with pytest.raises(FreezeContractError):
        adam_step(AdamState(), extractor.params, grads)
    with pytest.raises(ValueError):
        extractor.params['block0.bias'][0] = 1.0


def test_freeze_keeps_the_forward_output():
    classifier = Classifier.initialize(4, 3, np.random.default_rng(1))
    features = np.random.default_rng(2).standard_normal((5, 4))
    before = classifier.forward(features)
    freeze(classifier)
    np.testing.assert_array_equal(classifier.forward(features), before)
