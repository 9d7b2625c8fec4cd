from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from holomotion.config import settings
from holomotion.logger import logger

T = TypeVar("T")
R = TypeVar("R")


def run_concurrently(fn: Callable[[T], R], items: Iterable[T], label: str = "task") -> List[R]:
    """Runs ``fn`` over ``items`` on a bounded thread pool; results keep input order.

    The first exception raised by any work unit is re-raised after the pool drains.
    """
    items = list(items)
    workers = min(settings.MAX_CONCURRENT_TASKS, len(items))
    if workers <= 1:
        return [fn(item) for item in items]

    logger.debug(f"Dispatching {len(items)} {label} unit(s) to {workers} worker(s)")
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix=f"holomotion-{label}") as pool:
        futures = [pool.submit(fn, item) for item in items]
    return [future.result() for future in futures]
