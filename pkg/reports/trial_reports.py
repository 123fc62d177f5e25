"""Per-trial report files and the mean(±std) summary."""

import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence

import pandas as pd

from reports.metrics import TrialReport, aggregate_trials
from utils.export_import import export_import_manager

logger = logging.getLogger(__name__)

REPORTS_FILE = 'reports.jsonl'
SUMMARY_FILE = 'summary.txt'
SUMMARY_CSV_FILE = 'summary.csv'
SUMMARY_EXCEL_FILE = 'summary.xlsx'

GROUP_KEYS = ('variant', 'n_train_subjects', 'split')


def write_reports_jsonl(reports: Sequence[TrialReport], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for report in reports:
            f.write(json.dumps(report.to_dict(), sort_keys=True) + '\n')
    return path


def read_reports_jsonl(path) -> List[TrialReport]:
    reports = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if line.strip():
                reports.append(TrialReport.from_dict(json.loads(line)))
    return reports


def _group_key(report: TrialReport) -> tuple:
    values = {**report.metadata, 'split': report.split}
    return tuple(values.get(key, '') for key in GROUP_KEYS)


def summary_rows(reports: Sequence[TrialReport]) -> List[Dict]:
    """One row per (variant, training subjects, split) with aggregated metrics."""
    groups: Dict[tuple, List[TrialReport]] = {}
    for report in reports:
        groups.setdefault(_group_key(report), []).append(report)
    rows = []
    for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        members = groups[key]
        summary = aggregate_trials(members)
        row = {name: value for name, value in zip(GROUP_KEYS, key) if value != ''}
        row.update({
            'policies': members[0].metadata.get('policies', ''),
            'trials': summary['accuracy'].count,
            'accuracy': summary['accuracy'].format(),
            'macro_f1': summary['macro_f1'].format(),
            'accuracy_mean': summary['accuracy'].mean,
            'accuracy_std': summary['accuracy'].std,
            'macro_f1_mean': summary['macro_f1'].mean,
            'macro_f1_std': summary['macro_f1'].std,
        })
        rows.append(row)
    return rows


def render_summary(reports: Sequence[TrialReport]) -> str:
    rows = summary_rows(reports)
    if not rows:
        return "No reports.\n"
    frame = pd.DataFrame(rows)
    shown = [c for c in frame.columns if not c.endswith(('_mean', '_std'))]
    header = "Accuracy and macro F1 over trials, in percent: mean(±std)\n\n"
    return header + frame[shown].to_string(index=False) + "\n"


def write_trial_outputs(reports: Sequence[TrialReport], out_dir, excel: bool = True) -> Dict[str, Path]:
    """reports.jsonl, summary.txt, summary.csv and (optionally) summary.xlsx under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {'reports': write_reports_jsonl(reports, out_dir / REPORTS_FILE)}
    summary_path = out_dir / SUMMARY_FILE
    with open(summary_path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(render_summary(reports))
    written['summary'] = summary_path
    if export_import_manager.export_to_csv(summary_rows(reports), out_dir / SUMMARY_CSV_FILE):
        written['csv'] = out_dir / SUMMARY_CSV_FILE
    if excel:
        trial_rows = [{'trial_id': r.trial_id, 'split': r.split, 'accuracy': r.accuracy,
                       'macro_f1': r.macro_f1, **{k: v for k, v in r.metadata.items()
                                                   if isinstance(v, (str, int, float))}}
                      for r in reports]
        if export_import_manager.export_to_excel({'summary': summary_rows(reports), 'trials': trial_rows},
                                                 out_dir / SUMMARY_EXCEL_FILE):
            written['excel'] = out_dir / SUMMARY_EXCEL_FILE
    for name, path in written.items():
        logger.info(f"Wrote {name}: {path}")
    return written
