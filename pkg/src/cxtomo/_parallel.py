"""Order-preserving thread map used by the data-parallel loops."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def resolve_threads(threads=None) -> int:
    if threads is None:
        return max(1, os.cpu_count() or 1)
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def pmap(fn, items, threads=None) -> list:
    """``[fn(x) for x in items]`` evaluated on a thread pool.

    Work items are fixed by the caller, so results never depend on the
    number of workers or on scheduling.
    """
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def chunks(n: int, size: int):
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]
