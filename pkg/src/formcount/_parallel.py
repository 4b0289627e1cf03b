"""Deterministic chunked execution over a process pool."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("FORMCOUNT_WORKERS", "1")))
    except ValueError:
        return 1


def split(seq, parts: int) -> list[list]:
    """Split ``seq`` into ``parts`` contiguous chunks (some may be empty)."""
    seq = list(seq)
    parts = max(1, parts)
    size, extra = divmod(len(seq), parts)
    out, start = [], 0
    for i in range(parts):
        stop = start + size + (1 if i < extra else 0)
        out.append(seq[start:stop])
        start = stop
    return out


def map_chunks(fn, args: list, workers: int = 1) -> list:
    """``[fn(*a) for a in args]``, in order, optionally on ``workers`` processes."""
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *a) for a in args]
        return [f.result() for f in futures]
