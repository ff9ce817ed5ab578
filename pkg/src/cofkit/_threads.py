"""Worker-pool plumbing shared by collection and filtering.

Parallelism is opt-in: the COFKIT_THREADS environment variable caps the
number of worker threads, and the default is 1 (fully serial). All callers
are written so results are independent of the worker count.
"""

from __future__ import annotations

import itertools
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor

_SENTINEL = object()


def thread_count() -> int:
    """Worker cap from COFKIT_THREADS; 1 when unset or unparseable."""
    raw = os.environ.get("COFKIT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def run_ordered(fn, items, threads=None):
    """Yield fn(item) for each item, in item order.

    With threads > 1 a bounded window of tasks runs ahead on a thread
    pool; at most `threads` results are buffered so memory stays flat.
    """
    if threads is None:
        threads = thread_count()
    items = iter(items)
    if threads <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending = deque(
            pool.submit(fn, item) for item in itertools.islice(items, threads)
        )
        while pending:
            done = pending.popleft()
            nxt = next(items, _SENTINEL)
            if nxt is not _SENTINEL:
                pending.append(pool.submit(fn, nxt))
            yield done.result()
