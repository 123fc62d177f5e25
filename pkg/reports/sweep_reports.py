"""Hyper-parameter grid results."""

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from modules.errors import UndefinedMetricError
from utils.export_import import export_import_manager

logger = logging.getLogger(__name__)

SWEEP_FILE = 'sweep.json'
SWEEP_TEXT_FILE = 'sweep.txt'
SWEEP_EXCEL_FILE = 'sweep.xlsx'


@dataclass(frozen=True)
class SweepCell:
    method: str
    alpha: float
    cutoff_hz: Optional[float]
    best_val_accuracy: float
    test_accuracy: float
    test_macro_f1: float
    epochs: int


def grid_frame(cells: Sequence[SweepCell], method: str) -> pd.DataFrame:
    """alpha x cutoff table of best validation accuracy (percent) for one method."""
    rows = [c for c in cells if c.method == method]
    if not rows:
        raise UndefinedMetricError(f"No sweep cells for method '{method}'")
    frame = pd.DataFrame([{'alpha': c.alpha,
                           'cutoff_hz': c.cutoff_hz if c.cutoff_hz is not None else '-',
                           'best_val_accuracy': round(100.0 * c.best_val_accuracy, 1)} for c in rows])
    return frame.pivot(index='alpha', columns='cutoff_hz', values='best_val_accuracy')


def render_sweep(cells: Sequence[SweepCell]) -> str:
    """One grid per method; cells hold the best validation accuracy over all epochs."""
    blocks = []
    for method in dict.fromkeys(c.method for c in cells):
        grid = grid_frame(cells, method)
        blocks.append(f"{method}: best validation accuracy [%] (rows: alpha, columns: cutoff Hz)\n"
                      + grid.to_string())
    return "\n\n".join(blocks) + "\n"


def write_sweep_outputs(cells: Sequence[SweepCell], out_dir, excel: bool = True) -> Dict[str, Path]:
    if not cells:
        raise UndefinedMetricError("Sweep produced no cells")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [asdict(c) for c in cells]
    written = {}
    with open(out_dir / SWEEP_FILE, 'w', encoding='utf-8', newline='\n') as f:
        json.dump({'cells': rows}, f, indent=2, sort_keys=True)
        f.write('\n')
    written['sweep'] = out_dir / SWEEP_FILE
    with open(out_dir / SWEEP_TEXT_FILE, 'w', encoding='utf-8', newline='\n') as f:
        f.write(render_sweep(cells))
    written['grid'] = out_dir / SWEEP_TEXT_FILE
    if excel and export_import_manager.export_to_excel({'cells': rows}, out_dir / SWEEP_EXCEL_FILE):
        written['excel'] = out_dir / SWEEP_EXCEL_FILE
    for name, path in written.items():
        logger.info(f"Wrote {name}: {path}")
    return written


def read_sweep(path) -> List[SweepCell]:
    with open(path, 'r', encoding='utf-8') as f:
        return [SweepCell(**row) for row in json.load(f)['cells']]
