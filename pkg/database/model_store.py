"""Model directories: one tensor container per parameter plus manifest.json."""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from database.tensor_container import read_tensor, write_tensor
from modules.ensemble import EnsembleModel
from modules.errors import ContainerFormatError
from modules.network import Classifier, FeatureExtractor, ModelConfig
from modules.optimizer import freeze

logger = logging.getLogger(__name__)

MANIFEST_FILE = 'manifest.json'
FORMAT_NAME = 'octmix-model'
FORMAT_VERSION = 1


def _modules(model: EnsembleModel):
    """(prefix, module) pairs in a fixed order."""
    for k, extractor in enumerate(model.extractors):
        yield f"extractor{k}", extractor
    for k, head in enumerate(model.heads):
        yield f"head{k}", head
    yield "classifier", model.combined


def save_model(model: EnsembleModel, model_dir, metadata: Optional[Dict] = None) -> Path:
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    parameters = []
    for prefix, module in _modules(model):
        for name in sorted(module.params):
            full_name = f"{prefix}.{name}"
            file_name = f"{full_name}.octm"
            value = module.params[name]
            write_tensor(model_dir / file_name, value)
            parameters.append({
                'name': full_name,
                'file': file_name,
                'shape': list(value.shape),
                'dtype': 'float64',
                'frozen': bool(module.frozen),
            })
    manifest = {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'model_config': model.config.to_dict(),
        'num_branches': model.num_branches,
        'num_classes': model.config.num_classes,
        'parameters': parameters,
        'metadata': metadata or {},
    }
    manifest_path = model_dir / MANIFEST_FILE
    with open(manifest_path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')
    logger.info(f"Saved {len(parameters)} parameter tensors to {model_dir}")
    return manifest_path


def read_manifest(model_dir) -> Dict:
    manifest_path = Path(model_dir) / MANIFEST_FILE
    with open(manifest_path, 'r', encoding='utf-8') as f:
        manifest = json.load(f)
    if manifest.get('format') != FORMAT_NAME:
        raise ContainerFormatError(f"{manifest_path} is not a model manifest")
    if manifest.get('version') != FORMAT_VERSION:
        raise ContainerFormatError(f"Unsupported model manifest version {manifest.get('version')}")
    return manifest


def load_model(model_dir) -> Tuple[EnsembleModel, Dict]:
    """Rebuild the ensemble (with its freeze flags) and return it with the manifest."""
    model_dir = Path(model_dir)
    manifest = read_manifest(model_dir)
    cfg = manifest['model_config']
    config = ModelConfig(num_classes=cfg['num_classes'], channel_widths=tuple(cfg['channel_widths']),
                         num_blocks=cfg['num_blocks'], kernel_size=cfg['kernel_size'],
                         input_channels=cfg['input_channels'])
    grouped: Dict[str, Dict[str, np.ndarray]] = {}
    frozen: Dict[str, bool] = {}
    for entry in manifest['parameters']:
        prefix, name = entry['name'].split('.', 1)
        value = read_tensor(model_dir / entry['file'])
        if list(value.shape) != list(entry['shape']):
            raise ContainerFormatError(f"{entry['file']}: shape {value.shape} does not match manifest {entry['shape']}")
        grouped.setdefault(prefix, {})[name] = value
        frozen[prefix] = frozen.get(prefix, False) or bool(entry['frozen'])

    num_branches = int(manifest['num_branches'])
    try:
        extractors = [FeatureExtractor(config, grouped[f"extractor{k}"]) for k in range(num_branches)]
        heads = [Classifier(grouped[f"head{k}"]) for k in range(num_branches)]
        combined = Classifier(grouped['classifier'])
    except KeyError as e:
        raise ContainerFormatError(f"Model directory {model_dir} lacks parameters for {e}")
    model = EnsembleModel(config, extractors, heads, combined)
    for prefix, module in _modules(model):
        if frozen.get(prefix):
            freeze(module)
    return model, manifest
