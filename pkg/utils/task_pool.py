"""Thread pool for independent training jobs (branches, trials, sweep cells)."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional

logger = logging.getLogger(__name__)


class TaskPool:
    """Runs callables on worker threads and returns results in submission order."""

    def __init__(self, max_workers: int = 1):
        if max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers

    @property
    def is_serial(self) -> bool:
        return self.max_workers == 1

    def map_ordered(self, fn: Callable[..., Any], items: Iterable[Any]) -> List[Any]:
        """``[fn(item) for item in items]``, possibly in parallel.

        The first exception raised by any job is re-raised after all jobs finish.
        """
        items = list(items)
        if self.is_serial or len(items) <= 1:
            return [fn(item) for item in items]

        with ThreadPoolExecutor(max_workers=min(self.max_workers, len(items))) as executor:
            futures = [executor.submit(fn, item) for item in items]
            results, first_error = [], None
            for index, future in enumerate(futures):
                try:
                    results.append(future.result())
                except Exception as e:
                    logger.error(f"Error in task {index}: {e}")
                    first_error = first_error or e
                    results.append(None)
        if first_error is not None:
            raise first_error
        return results


def pool_for(workers: Optional[int]) -> TaskPool:
    return TaskPool(max(1, int(workers or 1)))


# Global instance
serial_pool = TaskPool(1)
