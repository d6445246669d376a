"""Order-preserving map over a thread pool.

Work items are keyed by their own seeds, so the result of ``ordered_map``
is the same for any thread count; ``threads=1`` runs strictly serially.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "LILFIELDS_THREADS"


def resolve_threads(threads=None) -> int:
    if threads is None:
        threads = os.environ.get(ENV_THREADS, 1)
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def ordered_map(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
