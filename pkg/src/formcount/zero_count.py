"""Exact counts of integer zeros of a system of forms in a dilated box.

``N(P) = #{x in Z^n : x/P in box, F_1(x) = ... = F_R(x) = 0}``, with the box
closed, so lattice points on its boundary are counted.

Three engines are provided:

* ``zero_count_enum``: coordinate-by-coordinate assignment with exact
  interval pruning; the generic path.
* ``zero_count_diagonal``: value-histogram convolution for diagonal systems
  with ``R <= 2`` on a symmetric cube.
* ``zero_count_scan``: an unpruned vectorised scan of the whole grid, kept
  as the reference the other two are tested against.
"""

from __future__ import annotations

import csv
import io
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ._guards import check_guard
from ._parallel import map_chunks, split
from .forms import Box, FormSystem

__all__ = [
    "CountResult",
    "ENUM",
    "DIAGONAL",
    "SCAN",
    "zero_count_enum",
    "zero_count_scan",
    "zero_count_diagonal",
    "diagonal_eligible",
    "zero_count",
    "count_series",
    "results_to_csv",
    "ENUM_GUARD",
    "SCAN_GUARD",
]

ENUM = "ENUM"
DIAGONAL = "DIAGONAL"
SCAN = "SCAN"

ENUM_GUARD = 10**9
SCAN_GUARD = 10**7
_INT64_SAFE = 2**62


@dataclass(frozen=True)
class CountResult:
    P: int
    count: int
    method: str
    elapsed: float


def _integral_forms(system: FormSystem) -> list[dict]:
    """Each form scaled to integer coefficients, as ``{exps: coeff}``."""
    return [f.integer_multiple()[1].as_dict() for f in system]


def _variable_order(forms: list[dict], n: int) -> list[int]:
    weight = [0] * n
    for f in forms:
        for exps, c in f.items():
            for i, e in enumerate(exps):
                weight[i] += abs(c) * e
    return sorted(range(n), key=lambda i: (-weight[i], i))


def _power_interval(lo: int, hi: int, e: int) -> tuple[int, int]:
    if e == 0:
        return 1, 1
    a, b = lo**e, hi**e
    if e % 2 == 0 and lo < 0 < hi:
        return 0, max(a, b)
    return min(a, b), max(a, b)


def _form_interval(poly: dict, pow_iv: list[list[tuple[int, int]]]) -> tuple[int, int]:
    """Exact range of ``poly`` over the remaining sub-box (monomial by monomial)."""
    total_lo = total_hi = 0
    for exps, c in poly.items():
        lo = hi = c
        for k, e in enumerate(exps):
            if e:
                a, b = pow_iv[k][e]
                ps = (lo * a, lo * b, hi * a, hi * b)
                lo, hi = min(ps), max(ps)
        total_lo += lo
        total_hi += hi
    return total_lo, total_hi


def _substitute(poly: dict, v: int) -> dict:
    """Set the leading remaining variable to ``v``."""
    out: dict = {}
    for exps, c in poly.items():
        key = exps[1:]
        out[key] = out.get(key, 0) + c * v ** exps[0]
    return {k: c for k, c in out.items() if c}


def _count_last(polys: list[dict], lo: int, hi: int) -> int:
    """Zeros of univariate polynomials (keys are 1-tuples) on ``[lo, hi]``."""
    if lo > hi:
        return 0
    live = [p for p in polys if p]
    if not live:
        return hi - lo + 1
    M = max(abs(lo), abs(hi))
    bound = max(sum(abs(c) * M ** k[0] for k, c in p.items()) for p in live)
    dtype = np.int64 if bound < _INT64_SAFE else object
    xs = np.arange(lo, hi + 1, dtype=np.int64).astype(dtype)
    ok = np.ones(len(xs), dtype=bool)
    for p in live:
        vals = np.zeros(len(xs), dtype=dtype)
        for (e,), c in p.items():
            vals = vals + c * xs**e if e else vals + c
        ok &= vals == 0
    return int(np.count_nonzero(ok))


def _enum_rec(polys: list[dict], ranges: list[tuple[int, int]], pow_ivs) -> int:
    if all(not p for p in polys):
        size = 1
        for lo, hi in ranges:
            size *= hi - lo + 1
        return size
    if len(ranges) == 1:
        return _count_last(polys, *ranges[0])
    for p in polys:
        lo, hi = _form_interval(p, pow_ivs)
        if lo > 0 or hi < 0:
            return 0
    lo, hi = ranges[0]
    sub_ranges, sub_ivs = ranges[1:], pow_ivs[1:]
    total = 0
    for v in range(lo, hi + 1):
        total += _enum_rec([_substitute(p, v) for p in polys], sub_ranges, sub_ivs)
    return total


def _enum_chunk(polys, ranges, pow_ivs, values) -> int:
    sub_ranges, sub_ivs = ranges[1:], pow_ivs[1:]
    total = 0
    for v in values:
        sub = [_substitute(p, v) for p in polys]
        if sub_ranges:
            total += _enum_rec(sub, sub_ranges, sub_ivs)
        else:
            total += all(not q or q.get((), 0) == 0 for q in sub)
    return total


def zero_count_enum(system: FormSystem, box: Box, P: int, guard: int | None = ENUM_GUARD,
                    workers: int = 1) -> CountResult:
    """Exact ``N(P)`` by pruned recursive enumeration.

    Variables are assigned in descending order of ``sum |c| * alpha_i``; after
    each assignment the range of every form over the remaining sub-box is
    bounded with exact integer interval arithmetic and the branch is dropped
    when some form cannot vanish.
    """
    if box.n != system.n:
        raise ValueError("box dimension does not match the number of variables")
    if P < 1:
        raise ValueError("P must be a positive integer")
    check_guard("zero_count_enum grid", box.grid_size(P), guard)
    t0 = time.perf_counter()
    n = system.n
    forms = _integral_forms(system)
    order = _variable_order(forms, n)
    polys = [{tuple(exps[i] for i in order): c for exps, c in f.items()} for f in forms]
    all_ranges = box.integer_ranges(P)
    ranges = [all_ranges[i] for i in order]
    if any(lo > hi for lo, hi in ranges):
        return CountResult(P, 0, ENUM, time.perf_counter() - t0)
    d = system.d
    pow_ivs = [[_power_interval(lo, hi, e) for e in range(d + 1)] for lo, hi in ranges]
    lo, hi = ranges[0]
    values = list(range(lo, hi + 1))
    jobs = [(polys, ranges, pow_ivs, chunk) for chunk in split(values, max(1, workers)) if chunk]
    count = sum(map_chunks(_enum_chunk, jobs, workers))
    return CountResult(P, count, ENUM, time.perf_counter() - t0)


def zero_count_scan(system: FormSystem, box: Box, P: int, guard: int | None = SCAN_GUARD) -> CountResult:
    """Exact ``N(P)`` by evaluating every form at every grid point (no pruning)."""
    if box.n != system.n:
        raise ValueError("box dimension does not match the number of variables")
    check_guard("zero_count_scan grid", box.grid_size(P), guard)
    t0 = time.perf_counter()
    ranges = box.integer_ranges(P)
    if any(lo > hi for lo, hi in ranges):
        return CountResult(P, 0, SCAN, time.perf_counter() - t0)
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in ranges]
    M = max(max(abs(lo), abs(hi)) for lo, hi in ranges)
    forms = _integral_forms(system)
    bound = max((sum(abs(c) for c in f.values()) * M ** system.d for f in forms), default=0)
    dtype = np.int64 if bound < _INT64_SAFE else object
    grid = np.meshgrid(*[a.astype(dtype) for a in axes], indexing="ij")
    ok = np.ones(grid[0].shape, dtype=bool)
    for f in forms:
        vals = np.zeros(grid[0].shape, dtype=dtype)
        for exps, c in f.items():
            term = np.full(grid[0].shape, c, dtype=dtype)
            for g, e in zip(grid, exps):
                if e:
                    term = term * g**e
            vals = vals + term
        ok &= vals == 0
    return CountResult(P, int(np.count_nonzero(ok)), SCAN, time.perf_counter() - t0)


def diagonal_eligible(system: FormSystem, box: Box) -> bool:
    return system.is_diagonal() and system.R <= 2 and box.n == system.n and box.is_symmetric_cube()


def _histogram_1d(coeffs: list[int], d: int, H: int) -> tuple[int, np.ndarray]:
    """Histogram of ``sum a_i x_i^d`` over ``[-H, H]^k`` as ``(offset, counts)``."""
    xs = range(-H, H + 1)
    offset, hist = 0, np.ones(1, dtype=np.int64)
    size = 1
    for a in coeffs:
        single = Counter(a * x**d for x in xs)
        lo, hi = min(single), max(single)
        size *= 2 * H + 1
        dtype = np.int64 if size < _INT64_SAFE else object
        out = np.zeros(len(hist) + hi - lo, dtype=dtype)
        src = hist.astype(dtype)
        for v, mult in single.items():
            s = v - lo
            out[s:s + len(hist)] += mult * src
        offset += lo
        hist = out
    return offset, hist


def _histogram_2d(pairs: list[tuple[int, int]], d: int, H: int) -> Counter:
    hist = Counter({(0, 0): 1})
    for a, b in pairs:
        single = Counter((a * x**d, b * x**d) for x in range(-H, H + 1))
        nxt: Counter = Counter()
        for (u, v), c in hist.items():
            for (s, t), m in single.items():
                nxt[(u + s, v + t)] += c * m
        hist = nxt
    return hist


def zero_count_diagonal(system: FormSystem, box: Box, P: int) -> CountResult:
    """Exact ``N(P)`` for diagonal systems (``R <= 2``) on a symmetric cube.

    The coordinates are split into two halves; each half's value histogram is
    built by repeated convolution and the count is the number of pairs of
    half-tuples whose values cancel.
    """
    if not system.is_diagonal():
        raise ValueError("zero_count_diagonal needs diagonal forms")
    if system.R > 2:
        raise ValueError("zero_count_diagonal supports R <= 2")
    if box.n != system.n or not box.is_symmetric_cube():
        raise ValueError("zero_count_diagonal needs a symmetric cube box")
    t0 = time.perf_counter()
    d, n = system.d, system.n
    H = box.integer_ranges(P)[0][1]
    coeffs = [f.integer_multiple()[1].diagonal_coefficients() for f in system]
    half = n // 2
    if system.R == 1:
        a = coeffs[0]
        o1, h1 = _histogram_1d(a[:half], d, H)
        o2, h2 = _histogram_1d(a[half:], d, H)
        # value v1 = o1 + i, v2 = o2 + j; need i + j = -(o1 + o2)
        target = -(o1 + o2)
        i = np.arange(len(h1))
        j = target - i
        mask = (j >= 0) & (j < len(h2))
        left = h1[mask].tolist()
        right = h2[j[mask]].tolist()
        count = sum(x * y for x, y in zip(left, right))
    else:
        pairs = list(zip(coeffs[0], coeffs[1]))
        g1 = _histogram_2d(pairs[:half], d, H)
        g2 = _histogram_2d(pairs[half:], d, H)
        count = sum(c * g2.get((-u, -v), 0) for (u, v), c in g1.items())
    return CountResult(P, int(count), DIAGONAL, time.perf_counter() - t0)


def zero_count(system: FormSystem, box: Box, P: int, method: str = "auto",
               guard: int | None = ENUM_GUARD, workers: int = 1) -> CountResult:
    if method == "auto":
        method = DIAGONAL if diagonal_eligible(system, box) else ENUM
    method = method.upper()
    if method == DIAGONAL:
        return zero_count_diagonal(system, box, P)
    if method == ENUM:
        return zero_count_enum(system, box, P, guard=guard, workers=workers)
    if method == SCAN:
        return zero_count_scan(system, box, P, guard=guard)
    raise ValueError(f"unknown method {method!r}")


def count_series(system: FormSystem, box: Box, Ps, method: str = "auto",
                 guard: int | None = ENUM_GUARD, workers: int = 1) -> list[CountResult]:
    return [zero_count(system, box, P, method=method, guard=guard, workers=workers) for P in Ps]


def results_to_csv(results, timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["P", "count", "method", "elapsed_s"])
    for r in results:
        w.writerow([r.P, r.count, r.method, f"{r.elapsed:.6f}" if timing else "NA"])
    return buf.getvalue()
