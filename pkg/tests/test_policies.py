import numpy as np
import pytest

from modules.augmentation import BetaParams, augmentation_counter, octave_mix, rotation
from modules.errors import AugmentationError
from modules.filters import FilterSpec
from modules.policies import (AugPolicy, MixupStep, OctaveMixStep, PolicyParams, RicapStep, RotationStep,
                              apply_policy, build_policy, describe_policies, policy_from_config)
from tests.conftest import make_batch


def test_zero_probability_returns_input(batch, rng):
    out = apply_policy(batch, AugPolicy(steps=(RotationStep(),), apply_prob=0.0), rng)
    assert out is batch
    assert augmentation_counter.total() == 0


def test_empty_policy_duplicates_batch(batch, rng):
    out = apply_policy(batch, AugPolicy(steps=(), apply_prob=1.0), rng)
    assert len(out) == 2 * len(batch)
    np.testing.assert_array_equal(out.windows[:len(batch)], batch.windows)
    np.testing.assert_array_equal(out.windows[len(batch):], batch.windows)


def test_rotation_then_octave_mix_replays_primitives():
    batch = make_batch(length=128)
    policy = AugPolicy(steps=(RotationStep(), OctaveMixStep(0.5, 2.1)), apply_prob=1.0)
    out = apply_policy(batch, policy, np.random.default_rng(42))

    replay_rng = np.random.default_rng(42)
    replay_rng.random()  # apply coin
    expected = octave_mix(rotation(batch, replay_rng), BetaParams(0.5), FilterSpec(2.1, 100.0, 127), replay_rng)
    assert len(out) == 2 * len(batch)
    np.testing.assert_array_equal(out.windows[:len(batch)], batch.windows)
    np.testing.assert_array_equal(out.labels[:len(batch)], batch.labels)
    np.testing.assert_array_equal(out.windows[len(batch):], expected.windows)
    np.testing.assert_array_equal(out.labels[len(batch):], expected.labels)


def test_apply_probability_is_one_coin_per_batch(batch):
    policy = AugPolicy(steps=(MixupStep(1.0),), apply_prob=0.5)
    sizes = {len(apply_policy(batch, policy, np.random.default_rng(seed))) for seed in range(40)}
    assert sizes == {len(batch), 2 * len(batch)}


def test_policy_rejects_two_mixing_steps():
    with pytest.raises(AugmentationError):
        AugPolicy(steps=(MixupStep(1.0), RicapStep(1.0)))
    with pytest.raises(AugmentationError):
        AugPolicy(steps=(), apply_prob=1.5)


def test_validate_for_reports_shape_problems():
    policy = AugPolicy(steps=(RotationStep(), OctaveMixStep(0.5, 2.1)))
    is_valid, errors = policy.validate_for(32, 4, 100.0)
    assert not is_valid
    assert len(errors) == 2
    assert policy.validate_for(128, 6, 100.0) == (True, [])


def test_named_policies_use_tuned_defaults():
    policy = build_policy('rot+octmix')
    assert policy.describe() == "Rot∘OctMix(0.5, 2.1)"
    assert policy.apply_prob == 0.5
    assert build_policy('rot+mixup').describe() == "Rot∘mixup(5.0)"
    assert build_policy('rot+ricap').describe() == "Rot∘RICAP(5.0)"
    none = build_policy('none')
    assert none.describe() == "None" and none.apply_prob == 0.0


def test_named_policy_parameters_can_be_overridden():
    params = PolicyParams(octmix_alpha=1.0, octmix_cutoff_hz=3.1, apply_prob=1.0)
    policy = build_policy('octmix', params)
    assert policy.steps == (OctaveMixStep(1.0, 3.1),)
    assert policy.apply_prob == 1.0


def test_unknown_policy_name():
    with pytest.raises(AugmentationError):
        build_policy('rot+cutmix')


def test_policy_from_mapping():
    policy = policy_from_config({'steps': [{'type': 'rotation'},
                                           {'type': 'octave_mix', 'alpha': 0.5, 'cutoff_hz': 2.1}],
                                 'apply_prob': 0.25})
    assert policy.steps == (RotationStep(), OctaveMixStep(0.5, 2.1))
    assert policy.apply_prob == 0.25
    assert policy_from_config(policy.to_config()).steps == policy.steps


@pytest.mark.parametrize("config", [
    {'steps': [{'type': 'cutout'}]},
    {'steps': [{'type': 'mixup', 'beta': 1.0}]},
    {'steps': [], 'probability': 0.5},
    42,
])
def test_policy_from_bad_mapping(config):
    with pytest.raises(AugmentationError):
        policy_from_config(config)


def test_describe_policies_joins_branches():
    policies = [build_policy('rot+octmix'), build_policy('rot+mixup')]
    assert describe_policies(policies) == "Rot∘OctMix(0.5, 2.1) / Rot∘mixup(5.0)"
