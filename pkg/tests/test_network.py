import numpy as np
import pytest

from modules.augmentation import one_hot
from modules.errors import ShapeError
from modules.network import (Classifier, FeatureExtractor, ModelConfig, Network, backward, conv1d_forward,
                             forward_features, forward_logits, maxpool2_backward, maxpool2_forward,
                             soft_cross_entropy, soft_cross_entropy_grad, softmax)
from modules.optimizer import freeze
from tests.conftest import make_batch


def tiny_network(config, seed=0):
    rng = np.random.default_rng(seed)
    extractor = FeatureExtractor.initialize(config, rng)
    classifier = Classifier.initialize(config.feature_dim, config.num_classes, rng)
    return Network([extractor], classifier)


def relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)


def numeric_gradient(loss_fn, value, eps=1e-6):
    grad = np.zeros_like(value)
    for index in np.ndindex(value.shape):
        original = value[index]
        value[index] = original + eps
        plus = loss_fn()
        value[index] = original - eps
        minus = loss_fn()
        value[index] = original
        grad[index] = (plus - minus) / (2 * eps)
    return grad


class TestModelConfig:
    def test_defaults_follow_full_scale(self):
        config = ModelConfig(num_classes=6)
        assert config.channel_widths == (64, 128, 256, 512, 512)
        assert config.num_blocks == 5 and config.min_timesteps == 32
        assert config.feature_dim == 512

    @pytest.mark.parametrize("kwargs", [
        {'num_classes': 1},
        {'num_classes': 3, 'kernel_size': 2},
        {'num_classes': 3, 'channel_widths': (4, 0)},
        {'num_classes': 3, 'channel_widths': (4, 8), 'num_blocks': 3},
    ])
    def test_invalid_configs(self, kwargs):
        with pytest.raises(ShapeError):
            ModelConfig(**kwargs)


class TestFeatures:
    def test_identity_block_averages_ones(self):
        config = ModelConfig(num_classes=2, channel_widths=(3,), kernel_size=3, input_channels=3)
        weight = np.zeros((3, 3, 3))
        weight[1] = np.eye(3)
        extractor = FeatureExtractor(config, {'block0.weight': weight, 'block0.bias': np.zeros(3)})
        features = forward_features(extractor, np.ones((2, 4, 3)))
        np.testing.assert_array_equal(features, np.ones((2, 3)))

    def test_output_shape(self, tiny_model_config):
        network = tiny_network(tiny_model_config)
        features = forward_features(network.extractors[0], make_batch(n=5, length=16))
        assert features.shape == (5, 8)

    def test_conv_is_linear_in_weights(self, rng):
        x = np.abs(rng.standard_normal((2, 8, 3)))
        weight = rng.standard_normal((3, 3, 4))
        doubled = weight.copy()
        doubled[:, :, 1] *= 2
        out, _ = conv1d_forward(x, weight, np.zeros(4))
        out_doubled, _ = conv1d_forward(x, doubled, np.zeros(4))
        np.testing.assert_allclose(out_doubled[:, :, 1], 2 * out[:, :, 1])
        np.testing.assert_allclose(out_doubled[:, :, 0], out[:, :, 0])

    def test_maxpool_drops_odd_tail(self):
        x = np.arange(5.0).reshape(1, 5, 1)
        out, argmax = maxpool2_forward(x)
        np.testing.assert_array_equal(out[0, :, 0], [1.0, 3.0])
        dx = maxpool2_backward(np.ones_like(out), argmax, 5)
        np.testing.assert_array_equal(dx[0, :, 0], [0, 1, 0, 1, 0])

    def test_short_windows_are_rejected(self, tiny_model_config):
        network = tiny_network(tiny_model_config)
        with pytest.raises(ShapeError, match="minimum T is 4"):
            network.forward(np.zeros((1, 3, 3)))
        with pytest.raises(ShapeError):
            network.forward(np.zeros((1, 16, 2)))


class TestClassifier:
    def test_zero_weights_give_uniform_probabilities(self):
        classifier = Classifier({'weight': np.zeros((4, 3)), 'bias': np.zeros(3)})
        _, probs = forward_logits(classifier, np.ones((2, 4)))
        np.testing.assert_allclose(probs, 1.0 / 3.0)

    def test_large_bias_dominates(self):
        classifier = Classifier({'weight': np.zeros((4, 3)), 'bias': np.array([10.0, 0.0, 0.0])})
        _, probs = forward_logits(classifier, np.ones((1, 4)))
        assert probs[0, 0] >= 0.9999
        assert np.all((probs > 0) & (probs < 1))

    def test_width_mismatch(self):
        with pytest.raises(ShapeError):
            Classifier.initialize(4, 3, np.random.default_rng(0)).forward(np.ones((2, 5)))


class TestLoss:
    def test_uniform_prediction_costs_log_k(self):
        probs = np.full((4, 5), 0.2)
        assert soft_cross_entropy(probs, one_hot([0, 1, 2, 3], 5)) == pytest.approx(np.log(5))

    def test_matching_targets_give_their_entropy(self):
        targets = np.array([[0.25, 0.75], [0.5, 0.5]])
        entropy = -(targets * np.log(targets)).sum(axis=1).mean()
        assert soft_cross_entropy(targets, targets) == pytest.approx(entropy)

    def test_logit_gradient_matches_finite_differences(self, rng):
        logits = rng.standard_normal((4, 3))
        targets = softmax(rng.standard_normal((4, 3)))
        analytic = soft_cross_entropy_grad(softmax(logits), targets)
        numeric = numeric_gradient(lambda: soft_cross_entropy(softmax(logits), targets), logits)
        assert relative_error(analytic, numeric) <= 1e-4

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            soft_cross_entropy(np.full((2, 3), 1 / 3), np.full((2, 2), 0.5))


class TestBackward:
    def test_every_parameter_matches_finite_differences(self, tiny_model_config):
        network = tiny_network(tiny_model_config, seed=3)
        batch = make_batch(n=4, length=16, seed=9)
        targets = 0.8 * batch.labels + 0.2 / 3
        _, grads = network.loss_and_gradients(batch.windows, targets)
        params = network.named_parameters()
        assert set(grads) == set(params)

        def loss():
            return soft_cross_entropy(network.predict_proba(batch.windows), targets)

        for name, value in params.items():
            numeric = numeric_gradient(loss, value)
            assert relative_error(grads[name], numeric) <= 1e-3, name

    def test_bias_gradient_vanishes_at_the_targets(self, tiny_model_config):
        network = tiny_network(tiny_model_config)
        batch = make_batch(n=4, length=16)
        forward = network.forward(batch.windows)
        grads = network.backward(forward, forward.probs.copy())
        np.testing.assert_allclose(grads['classifier.bias'], 0.0, atol=1e-8)

    def test_frozen_extractor_gets_no_gradient(self, tiny_model_config):
        network = tiny_network(tiny_model_config)
        freeze(network.extractors[0])
        loss, grads = backward(network, make_batch(n=4, length=16))
        assert np.isfinite(loss)
        assert set(grads) == {'classifier.weight', 'classifier.bias'}

    def test_concatenated_branches(self, tiny_model_config):
        rng = np.random.default_rng(0)
        extractors = [FeatureExtractor.initialize(tiny_model_config, rng) for _ in range(2)]
        network = Network(extractors, Classifier.initialize(16, 3, rng))
        probs = network.predict_proba([np.zeros((2, 16, 3)), np.ones((2, 16, 3))])
        assert probs.shape == (2, 3)
        with pytest.raises(ShapeError):
            Network(extractors, Classifier.initialize(8, 3, rng))
