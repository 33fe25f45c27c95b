import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "CTXLAB_THREADS"


def default_max_workers() -> int:
    """Worker cap from ``CTXLAB_THREADS``; a single worker when unset."""
    value = os.getenv(THREADS_ENV)
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


class WorkerPool:
    def __init__(self, max_workers: int | None = None):
        self.max_workers = max_workers or default_max_workers()
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers) if self.max_workers > 1 else None

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """Apply ``fn`` to every item; results keep the input order."""
        if self.executor is None:
            return [fn(item) for item in items]
        return list(self.executor.map(fn, items))

    def close(self) -> None:
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
