"""Order-preserving map over worker processes."""

from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, jobs=1):
    """``[fn(x) for x in items]``, spread over ``jobs`` processes; result order is input order."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))
