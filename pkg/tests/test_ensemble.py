import numpy as np
import pytest

from modules.augmentation import augmentation_counter
from modules.ensemble import (PHASE_JOINT, EnsembleModel, TrainConfig, clean_batches, epoch_batches,
                              joint_batch_preparer, predict, pretrain_branch, train_combined_classifier,
                              train_da_revisited, train_dar_ffe, train_simple_ensemble)
from modules.errors import AugmentationError, FreezeContractError, ShapeError
from modules.optimizer import AdamState, adam_step, freeze
from modules.policies import AugPolicy, PolicyParams, apply_policy, augment_copy, build_policy
from utils.seeding import STREAM_AUGMENT, STREAM_SHUFFLE, derive_rng
from utils.task_pool import TaskPool
from tests.conftest import make_batch

ALWAYS = PolicyParams(apply_prob=1.0)


@pytest.fixture
def data():
    return make_batch(n=12, length=64, seed=21)


def snapshot(params):
    return {name: value.copy() for name, value in params.items()}


def assert_same_params(left, right):
    assert set(left) == set(right)
    for name in left:
        np.testing.assert_array_equal(left[name], right[name], err_msg=name)


def train_config(*names, **kwargs):
    kwargs.setdefault('pretrain_epochs', 2)
    kwargs.setdefault('classifier_epochs', 2)
    kwargs.setdefault('batch_size', 5)
    kwargs.setdefault('seed', 3)
    return TrainConfig(policies=tuple(build_policy(n, ALWAYS) for n in names), **kwargs)


def test_epoch_batches_cover_every_sample_once(rng):
    batches = list(epoch_batches(12, 5, rng))
    assert [len(b) for b in batches] == [5, 5, 2]
    assert sorted(np.concatenate(batches).tolist()) == list(range(12))


def test_initialization_is_seeded(tiny_model_config):
    first = EnsembleModel.initialize(tiny_model_config, 2, seed=5)
    second = EnsembleModel.initialize(tiny_model_config, 2, seed=5)
    assert_same_params(first.named_parameters(), second.named_parameters())
    assert first.combined.in_dim == 16
    assert not np.array_equal(first.extractors[0].params['block0.weight'],
                              first.extractors[1].params['block0.weight'])


def test_zero_pretrain_epochs_keep_the_initialization(tiny_model_config, data):
    model = EnsembleModel.initialize(tiny_model_config, 1, seed=3)
    before = snapshot(model.named_parameters())
    trace = pretrain_branch(model, 0, data, train_config('rot+octmix', pretrain_epochs=0))
    assert trace.losses == []
    assert_same_params(model.named_parameters(), before)


def test_pretraining_replays_augment_then_step(tiny_model_config, data):
    cfg = train_config('rot+octmix')
    model = EnsembleModel.initialize(tiny_model_config, 1, seed=3)
    replica = EnsembleModel.initialize(tiny_model_config, 1, seed=3)
    trace = pretrain_branch(model, 0, data, cfg)

    network = replica.branch_network(0)
    params, state = network.named_parameters(), AdamState(lr=cfg.lr)
    shuffle_rng, augment_rng = derive_rng(3, STREAM_SHUFFLE, 0), derive_rng(3, STREAM_AUGMENT, 0)
    for _ in range(cfg.pretrain_epochs):
        for indices in epoch_batches(len(data), cfg.batch_size, shuffle_rng):
            augmented = apply_policy(data.take(indices), cfg.policies[0], augment_rng)
            _, grads = network.loss_and_gradients(augmented.windows, augmented.labels)
            adam_step(state, params, grads)

    assert_same_params(model.named_parameters(), replica.named_parameters())
    assert len(trace.losses) == cfg.pretrain_epochs
    # three mini-batches per epoch, two primitives per augmented batch
    assert trace.augmentation_calls == 2 * 3 * cfg.pretrain_epochs


def test_classifier_phase_requires_frozen_extractors(tiny_model_config, data):
    model = EnsembleModel.initialize(tiny_model_config, 1, seed=3)
    with pytest.raises(FreezeContractError):
        train_combined_classifier(model, data, train_config('rot'))


def test_clean_batches_reach_every_branch(tiny_model_config, data):
    model = EnsembleModel.initialize(tiny_model_config, 3, seed=3)
    inputs, targets = clean_batches(data)
    np.testing.assert_array_equal(targets, data.labels)
    probs = model.combined_network().predict_proba(inputs)
    assert probs.shape == (len(data), 3)
    for extractor in model.extractors:
        freeze(extractor)
    trace = train_combined_classifier(model, data, train_config('rot', 'rot', 'rot', classifier_epochs=1))
    assert len(trace.losses) == 1 and trace.augmentation_calls == 0


def test_dar_ffe_only_moves_the_classifier_after_pretraining(tiny_model_config, data):
    cfg = train_config('rot+octmix', 'rot+mixup', pretrain_epochs=3, classifier_epochs=3)
    model = EnsembleModel.initialize(tiny_model_config, 2, seed=3)
    pretrained = EnsembleModel.initialize(tiny_model_config, 2, seed=3)
    for k in range(2):
        pretrain_branch(pretrained, k, data, cfg)
    combined_before = snapshot(model.combined.params)

    traces = train_dar_ffe(model, data, cfg, validation=data)

    for k in range(2):
        assert model.extractors[k].frozen and model.heads[k].frozen
        assert_same_params(model.extractors[k].params, pretrained.extractors[k].params)
        assert_same_params(model.heads[k].params, pretrained.heads[k].params)
    assert not np.array_equal(model.combined.params['weight'], combined_before['weight'])
    assert [t.phase for t in traces] == ['pretrain[0]', 'pretrain[1]', 'classifier']
    assert traces[0].augmentation_calls > 0
    assert traces[-1].augmentation_calls == 0
    assert len(traces[-1].val_accuracy) == cfg.classifier_epochs


def test_parallel_branches_match_serial(tiny_model_config, data):
    cfg = train_config('rot+octmix', 'rot+ricap', pretrain_epochs=1, classifier_epochs=1)
    serial = EnsembleModel.initialize(tiny_model_config, 2, seed=3)
    threaded = EnsembleModel.initialize(tiny_model_config, 2, seed=3)
    train_dar_ffe(serial, data, cfg)
    traces = train_dar_ffe(threaded, data, cfg, pool=TaskPool(2))
    assert_same_params(serial.named_parameters(), threaded.named_parameters())
    assert all(t.augmentation_calls > 0 for t in traces[:2])


def test_joint_training_leaves_the_heads_alone(tiny_model_config, data):
    cfg = train_config('rot+octmix', 'rot+mixup')
    model = EnsembleModel.initialize(tiny_model_config, 2, seed=3)
    before = snapshot(model.named_parameters())
    trace = train_simple_ensemble(model, data, cfg)
    after = model.named_parameters()
    for name in before:
        moved = not np.array_equal(before[name], after[name])
        if name.startswith('head'):
            assert not moved, name
        elif name.endswith('weight'):
            assert moved, name
    assert trace.phase == 'joint' and len(trace.losses) == 2


def test_joint_training_needs_one_apply_probability(tiny_model_config, data):
    policies = (build_policy('rot+octmix', PolicyParams(apply_prob=0.5)),
                build_policy('rot+mixup', PolicyParams(apply_prob=1.0)))
    model = EnsembleModel.initialize(tiny_model_config, 2, seed=3)
    with pytest.raises(AugmentationError):
        train_simple_ensemble(model, data, TrainConfig(policies=policies, pretrain_epochs=1))


def test_joint_targets_average_the_branch_labels(data):
    cfg = train_config('rot+mixup', 'rot+ricap')
    inputs, targets = joint_batch_preparer(cfg)(data)
    copies = [augment_copy(data, policy, derive_rng(3, STREAM_AUGMENT, PHASE_JOINT)) for policy in cfg.policies]
    n = len(data)
    for branch_input, copy in zip(inputs, copies):
        np.testing.assert_array_equal(branch_input[:n], data.windows)
        np.testing.assert_array_equal(branch_input[n:], copy.windows)
    np.testing.assert_array_equal(targets[:n], data.labels)
    np.testing.assert_allclose(targets[n:], (copies[0].labels + copies[1].labels) / 2, atol=1e-15)
    np.testing.assert_allclose(targets.sum(axis=1), 1.0, atol=1e-9)


def test_joint_targets_match_branches_sharing_a_step(data):
    cfg = train_config('rot+octmix', 'rot+octmix')
    inputs, targets = joint_batch_preparer(cfg)(data)
    np.testing.assert_array_equal(inputs[0], inputs[1])
    replay = augment_copy(data, cfg.policies[0], derive_rng(3, STREAM_AUGMENT, PHASE_JOINT))
    np.testing.assert_array_equal(targets[len(data):], replay.labels)


def test_revisited_training_ends_with_a_clean_phase(tiny_model_config, data):
    model = EnsembleModel.initialize(tiny_model_config, 1, seed=3)
    augmented, clean = train_da_revisited(model, data, train_config('rot+octmix'))
    assert augmented.augmentation_calls > 0
    assert clean.phase == 'revisit' and clean.augmentation_calls == 0
    assert not model.extractors[0].frozen


def test_config_must_match_the_model(tiny_model_config, data):
    model = EnsembleModel.initialize(tiny_model_config, 2, seed=3)
    with pytest.raises(ShapeError):
        pretrain_branch(model, 0, data, train_config('rot'))
    with pytest.raises(ShapeError):
        pretrain_branch(model, 2, data, train_config('rot', 'rot'))
    with pytest.raises(ShapeError):
        pretrain_branch(model, 0, data, TrainConfig(policies=(AugPolicy(), AugPolicy()), batch_size=0))


def test_predictions_follow_sample_order(tiny_model_config, data):
    model = EnsembleModel.initialize(tiny_model_config, 2, seed=3)
    probs, ids = predict(model, data)
    order = np.random.default_rng(0).permutation(len(data))
    permuted_probs, permuted_ids = predict(model, data.take(order))
    np.testing.assert_allclose(permuted_probs, probs[order], atol=1e-12)
    np.testing.assert_array_equal(permuted_ids, ids[order])
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)
    assert augmentation_counter.total() == 0
