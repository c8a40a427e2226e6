"""
Code modified from: https://github.com/mowshon/bounded_pool_executor
"""

import concurrent.futures
import threading
from typing import Callable, Iterable, Optional, TypeVar
from .config import N_WORKERS

T = TypeVar('T')
R = TypeVar('R')

class BoundedThreadPoolExecutor(concurrent.futures.ThreadPoolExecutor):
    """ Thread pool whose submit() blocks once 2 * max_workers jobs are in flight. """

    def __init__(self, max_workers: Optional[int] = None):
        super().__init__(max_workers or N_WORKERS)
        self.semaphore = threading.BoundedSemaphore(self._max_workers * 2)

    def release(self, fn):
        self.semaphore.release()

    def submit(self, fn, /, *args, **kwargs):
        self.semaphore.acquire()
        future = super().submit(fn, *args, **kwargs)
        future.add_done_callback(self.release)
        return future

def ordered_map(fn: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> list[R]:
    """
    Apply `fn` concurrently and return results in input order, so reductions over
    the results are deterministic. The first exception raised by a job propagates.
    """
    items = list(items)
    if len(items) <= 1 or (max_workers or N_WORKERS) == 1:
        return [fn(x) for x in items]
    with BoundedThreadPoolExecutor(max_workers) as pool:
        futures = [pool.submit(fn, x) for x in items]
        return [f.result() for f in futures]
