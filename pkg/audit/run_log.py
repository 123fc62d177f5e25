"""Run event logging."""

import json
import logging
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

logger = logging.getLogger(__name__)

RUN_LOG_FILE = 'run_log.jsonl'


class RunLog:
    """Appends machine-readable run events to ``<output_dir>/run_log.jsonl``."""

    def __init__(self):
        self._lock = threading.Lock()
        self.path: Optional[Path] = None

    def open(self, output_dir) -> Path:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        self.path = output_dir / RUN_LOG_FILE
        return self.path

    def log_event(self, event_type: str, description: str, metadata: Optional[Dict] = None) -> Dict:
        """Log one event; without an open log the entry is only returned."""
        entry = {
            'id': str(uuid.uuid4()),
            'event_type': event_type,
            'description': description,
            'metadata': metadata or {},
            'created_at': datetime.now(timezone.utc).isoformat(),
        }
        if self.path is None:
            return entry
        try:
            with self._lock, open(self.path, 'a', encoding='utf-8') as f:
                f.write(json.dumps(entry, default=str) + '\n')
        except OSError as e:
            logger.error(f"Error logging run event: {e}")
        return entry

    def log_error(self, error: BaseException, exit_code: int, command: str = '') -> Dict:
        return self.log_event('error', str(error), {
            'command': command,
            'error_type': type(error).__name__,
            'message': str(error),
            'exit_code': exit_code,
        })

    def get_entries(self, event_type: Optional[str] = None, limit: int = 100) -> List[Dict]:
        if self.path is None or not self.path.exists():
            return []
        with open(self.path, 'r', encoding='utf-8') as f:
            entries = [json.loads(line) for line in f if line.strip()]
        if event_type:
            entries = [e for e in entries if e['event_type'] == event_type]
        return entries[-limit:]

    def close(self):
        self.path = None


# Global instance
run_log = RunLog()
