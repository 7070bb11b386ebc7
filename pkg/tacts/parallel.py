import logging
from typing import Callable, Iterable, List, TypeVar

from joblib import Parallel, delayed

logger = logging.getLogger("tacts.parallel")

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply fn to every item, in input order, optionally across processes.

    Results come back in input order whatever the scheduling, so outputs do
    not depend on the worker count.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(workers, len(items))
    logger.debug(f"Dispatching {len(items)} jobs to {workers} worker processes")
    return list(Parallel(n_jobs=workers)(delayed(fn)(item) for item in items))
