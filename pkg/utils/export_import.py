"""Export of report rows to CSV and Excel."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Font

logger = logging.getLogger(__name__)


class ExportImportManager:
    """Manages export operations for tabular report rows."""

    def export_to_csv(self, rows: Sequence[Dict], file_path, columns: Optional[List[str]] = None) -> bool:
        """Export rows to CSV."""
        if not rows:
            return False
        try:
            frame = pd.DataFrame(list(rows), columns=columns)
            frame.to_csv(file_path, index=False, lineterminator='\n')
            return True
        except OSError as e:
            logger.error(f"Error exporting to CSV: {e}")
            return False

    def export_to_excel(self, sheets: Dict[str, Sequence[Dict]], file_path) -> bool:
        """Export one worksheet per entry of ``sheets``; headers come from the first row."""
        if not any(sheets.values()):
            return False
        try:
            wb = Workbook()
            wb.remove(wb.active)
            for title, rows in sheets.items():
                ws = wb.create_sheet(title=title[:31])
                if not rows:
                    continue
                headers = list(rows[0].keys())
                ws.append(headers)
                for cell in ws[1]:
                    cell.font = Font(bold=True)
                for row in rows:
                    ws.append([row.get(h, '') for h in headers])
            Path(file_path).parent.mkdir(parents=True, exist_ok=True)
            wb.save(file_path)
            return True
        except OSError as e:
            logger.error(f"Error exporting to Excel: {e}")
            return False


# Global instance
export_import_manager = ExportImportManager()
