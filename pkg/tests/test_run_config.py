import json
from pathlib import Path

import pytest

from config.run_config import apply_overrides, load_run_config, parse_override_value, parse_run_config
from config.settings import settings
from modules.errors import ConfigError
from modules.experiments import DEFAULT_VARIANT

CONFIGS = Path(__file__).resolve().parent.parent / 'configs'


def test_empty_config_uses_defaults():
    cfg = parse_run_config({}, 'train')
    assert cfg.variant.name == DEFAULT_VARIANT
    assert cfg.trials == 1 and cfg.seed == 0
    assert cfg.data.source == 'synthetic' and cfg.data.synth.seed == 0
    assert cfg.model.channel_widths == (64, 128, 256, 512, 512)
    assert cfg.policy_params.octmix_cutoff_hz == 2.1
    assert cfg.train.pretrain_epochs == 300


def test_preset_supplies_split_and_windowing():
    cfg = parse_run_config({'data': {'preset': 'hasc', 'source': 'csv', 'manifest': 'corpus/manifest.tsv'}})
    assert (cfg.data.train_counts, cfg.data.n_valid_subjects, cfg.data.n_test_subjects) == ((10,), 50, 50)
    assert cfg.data.windowing.trim_s == 5.0
    assert cfg.data.num_classes == 6


def test_every_problem_is_reported_at_once():
    raw = {'seed': 'x', 'colour': 'blue', 'train': {'batch_size': 0, 'epochs': 3},
           'policy_params': {'apply_prob': 1.5}, 'variant': 'nonexistent', 'model': {'kernel_size': 4}}
    with pytest.raises(ConfigError) as excinfo:
        parse_run_config(raw)
    errors = excinfo.value.errors
    assert len(errors) >= 7
    assert "colour: unknown key" in errors
    assert "train.epochs: unknown key" in errors
    assert any(e.startswith("seed:") for e in errors)
    assert any(e.startswith("variant:") for e in errors)


def test_null_is_rejected_where_a_value_is_required():
    raw = {'data': {'synth': {'duration_s': None, 'subjects': None, 'amplitudes': None}},
           'train': {'lr': None}}
    with pytest.raises(ConfigError) as excinfo:
        parse_run_config(raw, 'gen-synth')
    errors = excinfo.value.errors
    assert "data.synth.duration_s: expected a number, got null" in errors
    assert "data.synth.subjects: expected an integer, got null" in errors
    assert "train.lr: expected a number, got null" in errors
    # optional keys still accept null
    assert not any(e.startswith("data.synth.amplitudes") for e in errors)
    cfg = parse_run_config({'policy_params': {'octmix_num_taps': None}})
    assert cfg.policy_params.octmix_num_taps is None


def test_shape_checks_need_no_data():
    with pytest.raises(ConfigError, match="pooling stages"):
        parse_run_config({'data': {'windowing': {'frame': 16}}, 'model': {'scale': 'full'}})
    with pytest.raises(ConfigError, match="OctMix"):
        parse_run_config({'data': {'windowing': {'frame': 32}}, 'model': {'scale': 'desk'}})


def test_split_must_fit_the_synthetic_subjects():
    raw = {'data': {'synth': {'subjects': 10}, 'split': {'train': 8, 'valid': 2, 'test': 2}}}
    with pytest.raises(ConfigError, match="needs 12 subjects"):
        parse_run_config(raw, 'train')
    assert parse_run_config(raw, 'gen-synth').data.synth.subjects == 10


def test_csv_source_needs_manifest_and_classes():
    with pytest.raises(ConfigError) as excinfo:
        parse_run_config({'data': {'source': 'csv'}})
    assert any("data.manifest" in e for e in excinfo.value.errors)
    assert any("data.num_classes" in e for e in excinfo.value.errors)


def test_command_specific_requirements():
    with pytest.raises(ConfigError, match="eval.model_dir"):
        parse_run_config({}, 'eval')
    with pytest.raises(ConfigError, match="validation"):
        parse_run_config({'data': {'split': {'valid': 0}}}, 'sweep')
    with pytest.raises(ConfigError, match="unknown command"):
        parse_run_config({}, 'deploy')


def test_sweep_cells():
    cfg = parse_run_config({'sweep': {'methods': ['rot+octmix', 'rot+mixup'], 'alphas': [0.5, 1],
                                      'cutoffs_hz': [1.1, 2.1, 3.1]}}, 'sweep')
    cells = cfg.sweep.cells()
    assert len(cells) == 2 * 3 + 2
    assert cells[0] == ('rot+octmix', 0.5, 1.1)
    assert cells[-1] == ('rot+mixup', 1.0, None)


def test_overrides():
    assert parse_override_value('5') == 5
    assert parse_override_value('[1, 2]') == [1, 2]
    assert parse_override_value('desk') == 'desk'
    raw = apply_overrides({'train': {'lr': 0.1}}, ['train.pretrain_epochs=5', 'model.scale=desk'])
    assert raw == {'train': {'lr': 0.1, 'pretrain_epochs': 5}, 'model': {'scale': 'desk'}}
    with pytest.raises(ConfigError):
        apply_overrides({'seed': 1}, ['seed.value=2', 'noequals'])


def test_environment_overrides_output_dir(monkeypatch, tmp_path):
    monkeypatch.setenv('OCTMIX_OUTPUT_DIR', str(tmp_path / 'env'))
    settings.reload()
    assert parse_run_config({'output_dir': 'runs/x'}).output_dir == tmp_path / 'env'


def test_unreadable_config_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / 'missing.json')
    bad = tmp_path / 'bad.json'
    bad.write_text('{"seed": ', encoding='utf-8')
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_run_config(bad)
    listed = tmp_path / 'list.json'
    listed.write_text('[1, 2]', encoding='utf-8')
    with pytest.raises(ConfigError):
        load_run_config(listed)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob('*.json')), ids=lambda p: p.stem)
def test_shipped_configs_are_valid(path):
    command = {'gen_synth': 'gen-synth', 'inspect_filter': 'inspect-filter', 'eval': 'eval',
               'augment': 'augment', 'sweep': 'sweep'}.get(path.stem, 'train')
    cfg = load_run_config(path, command)
    assert cfg.command == command
    assert json.loads(path.read_text(encoding='utf-8')) == cfg.raw
