"""Thread-pool helper honoring ``ASPLUND_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("ASPLUND_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn, items, pure: bool = True) -> list:
    """``[fn(x) for x in items]``, on a thread pool when ``pure`` and threads > 1."""
    items = list(items)
    n = thread_count()
    if not pure or n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
