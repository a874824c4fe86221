"""Order-preserving parallel map capped by FRACSPEC_THREADS."""

import os
from concurrent.futures import ThreadPoolExecutor

from fracspec.errors import ParameterError


def thread_count():
    raw = os.environ.get("FRACSPEC_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError("FRACSPEC_THREADS", f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ParameterError("FRACSPEC_THREADS", f"expected a positive integer, got {raw!r}")
    return n


def pmap(fn, items):
    """``[fn(x) for x in items]``, possibly on a thread pool.

    Every item is computed independently and results keep their input order,
    so the output does not depend on the schedule.
    """
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
