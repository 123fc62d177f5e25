"""CSV recordings listed by a tab-separated manifest.

Manifest: one record per line, ``path<TAB>subject_id<TAB>label<TAB>sample_rate_hz``;
blank lines and lines starting with ``#`` are ignored, relative paths resolve
against the manifest's directory. Each CSV holds ``timestamp, ch_0 .. ch_{C-1}``
columns, optionally preceded by a header row starting with ``timestamp``.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from dataset.recordings import Recording
from modules.errors import CorpusParseError, DatasetError
from utils.task_pool import TaskPool, serial_pool

logger = logging.getLogger(__name__)

MANIFEST_FIELDS = ('path', 'subject_id', 'label', 'sample_rate_hz')


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    subject_id: str
    label: int
    sample_rate_hz: float
    line: int


def _parse_label(raw: str, class_names: Optional[Sequence[str]], num_classes: Optional[int]) -> Optional[int]:
    if class_names is not None and raw in class_names:
        return list(class_names).index(raw)
    try:
        label = int(raw)
    except ValueError:
        return None
    limit = len(class_names) if class_names is not None else num_classes
    if label < 0 or (limit is not None and label >= limit):
        return None
    return label


def read_manifest(manifest_path, class_names: Optional[Sequence[str]] = None,
                  num_classes: Optional[int] = None) -> List[ManifestEntry]:
    """Parse and check the manifest; every referenced file must exist."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DatasetError(f"Manifest not found: {manifest_path}")
    base = manifest_path.parent
    entries, missing = [], []
    with open(manifest_path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()
    for number, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith('#'):
            continue
        fields = line.split('\t')
        if len(fields) != len(MANIFEST_FIELDS):
            raise CorpusParseError(f"expected {len(MANIFEST_FIELDS)} tab-separated fields "
                                   f"({', '.join(MANIFEST_FIELDS)}), got {len(fields)}", manifest_path, number)
        raw_path, subject_id, raw_label, raw_rate = (field.strip() for field in fields)
        label = _parse_label(raw_label, class_names, num_classes)
        if label is None:
            raise CorpusParseError(f"unknown label '{raw_label}'", manifest_path, number)
        try:
            sample_rate = float(raw_rate)
        except ValueError:
            raise CorpusParseError(f"sample rate '{raw_rate}' is not a number", manifest_path, number)
        if not (np.isfinite(sample_rate) and sample_rate > 0):
            raise CorpusParseError(f"sample rate must be positive, got {raw_rate}", manifest_path, number)
        path = Path(raw_path)
        path = path if path.is_absolute() else base / path
        if not path.exists():
            missing.append(str(path))
        entries.append(ManifestEntry(path, subject_id, label, sample_rate, number))
    if missing:
        raise DatasetError(f"{len(missing)} recording file(s) listed in {manifest_path} are missing: "
                           + ", ".join(missing))
    return entries


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except (TypeError, ValueError):
        return False


def read_csv_samples(path: Path) -> np.ndarray:
    """(L, C) channel samples of one recording file; the timestamp column is dropped."""
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False,
                          skip_blank_lines=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise CorpusParseError("file is empty", path)
    except pd.errors.ParserError as e:
        raise CorpusParseError(f"ragged row: {e}", path)

    first_line = 1
    if raw.shape[0] and str(raw.iat[0, 0]).strip().lower() == 'timestamp':
        raw = raw.iloc[1:]
        first_line = 2
    if raw.shape[1] < 2:
        raise CorpusParseError(f"expected a timestamp column and at least one channel, got {raw.shape[1]} column(s)", path)
    if raw.shape[0] == 0:
        raise CorpusParseError("file holds no samples", path)

    values = raw.apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64)
    bad_rows, bad_cols = np.nonzero(~np.isfinite(values))
    if bad_rows.size:
        row, col = bad_rows[0], bad_cols[0]
        cell = raw.iat[row, col]
        line = first_line + int(row)
        if pd.isna(cell):
            raise CorpusParseError(f"ragged row: expected {raw.shape[1]} fields", path, line)
        if _is_number(cell):
            raise CorpusParseError(f"non-finite value '{cell}' in column {col}", path, line)
        raise CorpusParseError(f"non-numeric value '{cell}' in column {col}", path, line)
    # to_numeric is not correctly rounded; the object cast parses every cell exactly
    return raw.iloc[:, 1:].to_numpy(dtype=object).astype(np.float64)


def _load_entry(entry: ManifestEntry) -> Recording:
    samples = read_csv_samples(entry.path)
    return Recording(entry.subject_id, entry.label, samples, entry.sample_rate_hz, name=entry.path.stem)


def load_csv_corpus(manifest_path, class_names: Optional[Sequence[str]] = None,
                    num_classes: Optional[int] = None, pool: TaskPool = serial_pool) -> List[Recording]:
    """Every recording listed in the manifest, in manifest order."""
    entries = read_manifest(manifest_path, class_names, num_classes)
    recordings = pool.map_ordered(_load_entry, entries)
    logger.info(f"Loaded {len(recordings)} recordings from {manifest_path}")
    return recordings


def write_csv_corpus(recordings: Sequence[Recording], out_dir, manifest_name: str = 'manifest.tsv') -> Path:
    """One CSV per recording plus the manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_lines = []
    for index, recording in enumerate(recordings):
        file_name = f"{recording.name or f'recording{index:05d}'}.csv"
        frame = pd.DataFrame(recording.samples,
                             columns=[f"ch_{c}" for c in range(recording.num_channels)])
        frame.insert(0, 'timestamp', np.arange(recording.num_samples) / recording.sample_rate_hz)
        frame.to_csv(out_dir / file_name, index=False, float_format='%.17g', lineterminator='\n')
        manifest_lines.append('\t'.join([file_name, recording.subject_id, str(recording.label),
                                         repr(float(recording.sample_rate_hz))]))
    manifest_path = out_dir / manifest_name
    with open(manifest_path, 'w', encoding='utf-8', newline='\n') as f:
        f.write('\n'.join(manifest_lines) + '\n')
    logger.info(f"Wrote {len(recordings)} recordings and {manifest_path}")
    return manifest_path
