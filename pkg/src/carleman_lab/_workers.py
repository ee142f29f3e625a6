import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    raw = os.environ.get("CARLEMAN_LAB_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    cpus = os.cpu_count() or 1
    return max(1, min(cap, cpus) if cap > 0 else cpus)


def parallel_map(fn, items):
    """Order-preserving map; threads only help where kernels release the GIL."""
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
