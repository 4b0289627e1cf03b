"""Exact counts for the auxiliary inequality and its dyadic decomposition.

``N^aux_f(B)`` counts integer ``(d-1)``-tuples ``(x_1, ..., x_{d-1})`` with
``|x_k|_inf <= B`` and ``|m^(f)(x)|_inf < |f^[d]| B^(d-2)`` (strict).  The
dyadic cells ``Z(T)`` use the shells ``T_k <= |x_k|_inf <= 2 T_k`` and the
non-strict bound ``|m^(beta.f)|_inf <= |beta|_inf B^(d-2)``.  The two
definitions are kept separate on purpose.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._guards import check_guard
from ._parallel import map_chunks, split
from .forms import Form, FormSystem, beta_dot, derivative_tensor

__all__ = [
    "AuxCountResult",
    "DyadicCell",
    "GrowthRow",
    "aux_count_naive",
    "aux_count_slab",
    "aux_count",
    "dyadic_count",
    "z_style_count",
    "covering_check",
    "growth_table",
    "results_to_csv",
    "growth_to_csv",
    "ENUM_GUARD",
]

ENUM_GUARD = 10**9
_CHUNK = 1 << 20
_INT64_SAFE = 1 << 62


@dataclass(frozen=True)
class AuxCountResult:
    B: Fraction
    count: int
    method: str
    elapsed: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class DyadicCell:
    T: tuple[int, ...]
    count: int


@dataclass
class GrowthRow:
    B: int
    count: int
    ratios: dict[int, float]


def _grid(bound: int, n: int) -> np.ndarray:
    r = np.arange(-bound, bound + 1, dtype=np.int64)
    return np.stack(np.meshgrid(*([r] * n), indexing="ij"), axis=-1).reshape(-1, n)


def _shell(T: int, n: int) -> np.ndarray:
    g = _grid(2 * T, n)
    return g[np.abs(g).max(axis=1) >= T]


def _prepare(f: Form, B):
    """Integer tensor and the scaled strict threshold ``scale*|m_i| < limit``."""
    B = Fraction(B)
    if B < 1:
        raise ValueError("B must be at least 1")
    if f.d < 2:
        raise ValueError("degree must be at least 2")
    if f.is_zero():
        raise ValueError("the zero form has no auxiliary inequality")
    _, fi = f.integer_multiple()
    T = derivative_tensor(fi)
    # |m| < (maxT/d!) * (p/q)^(d-2)  <=>  d! q^(d-2) |m| < maxT p^(d-2)
    scale = math.factorial(f.d) * B.denominator ** (f.d - 2)
    limit = T.max_abs() * B.numerator ** (f.d - 2)
    return T, math.floor(B), scale, limit


def _tuple_chunk_count(flat, slots, lo: int, hi: int, scale: int, limit: int,
                       strict: bool, dtype) -> int:
    """Count tuples whose prefix (all slots but the last) has flat index in ``[lo, hi)``.

    ``flat`` is the derivative tensor reshaped to ``(n^(d-2), n, n)``; each
    prefix gives an ``n x n`` matrix which is applied to every vector of the
    last slot, so every tuple is evaluated.
    """
    n = slots[-1].shape[1]
    prefix_slots = slots[:-1]
    last = slots[-1].astype(dtype)
    if prefix_slots:
        sizes = [len(s) for s in prefix_slots]
        idx = np.arange(lo, hi, dtype=np.int64)
        coords = []
        for size in reversed(sizes):
            idx, rem = np.divmod(idx, size)
            coords.append(rem)
        coords.reverse()
        outer = prefix_slots[0][coords[0]].astype(dtype)
        for s, c in zip(prefix_slots[1:], coords[1:]):
            v = s[c].astype(dtype)
            outer = (outer[:, :, None] * v[:, None, :]).reshape(len(v), -1)
        mats = (outer @ flat.reshape(flat.shape[0], -1)).reshape(-1, n, n)
    else:
        mats = flat.reshape(1, n, n)
    # mats[c, j, i]: coefficient of y_j in m_i
    if dtype is object:
        m = np.array([last @ M for M in mats], dtype=object)
        worst = np.abs(m).max(axis=2).ravel()
        vals = [int(w) * scale for w in worst]
        return sum(1 for w in vals if (w < limit if strict else w <= limit))
    m = np.matmul(last, mats)  # (c, K, n)
    ok = None
    for i in range(n):
        a = np.abs(m[:, :, i]) * scale
        cond = a < limit if strict else a <= limit
        ok = cond if ok is None else ok & cond
    return int(np.count_nonzero(ok))


def _enumerate_tuples(tensor, slots, scale: int, limit: int, strict: bool, workers: int = 1) -> int:
    total = math.prod(len(s) for s in slots)
    if total == 0:
        return 0
    bound = sum(abs(int(v)) for _, _, v in tensor.expanded)
    for s in slots:
        bound *= int(np.abs(s).max()) if s.size else 0
    if bound * scale < 2**53 and limit < 2**53:
        dtype = np.float64  # every product and partial sum is an exactly representable integer
    elif bound * scale < _INT64_SAFE and limit < _INT64_SAFE:
        dtype = np.int64
    else:
        dtype = object
    n = tensor.n
    flat = tensor.dense(dtype=object).reshape(-1, n, n)
    flat = flat.astype(dtype) if dtype is not object else flat
    n_prefix = total // len(slots[-1])
    step = max(1, _CHUNK // len(slots[-1]))
    ranges = [(lo, min(lo + step, n_prefix)) for lo in range(0, n_prefix, step)]
    jobs = [(flat, slots, lo, hi, scale, limit, strict, dtype) for lo, hi in ranges]
    if workers > 1:
        parts = split(jobs, workers)
        counts = map_chunks(_run_jobs, [(p,) for p in parts], workers)
        return sum(counts)
    return _run_jobs(jobs)


def _run_jobs(jobs) -> int:
    return sum(_tuple_chunk_count(*j) for j in jobs)


def aux_count_naive(f: Form, B, guard: int | None = ENUM_GUARD, workers: int = 1) -> AuxCountResult:
    """``N^aux_f(B)`` by enumerating every tuple in ``[-B, B]^((d-1)n)``."""
    start = time.perf_counter()
    T, Bi, scale, limit = _prepare(f, B)
    check_guard("aux_count_naive", (2 * Bi + 1) ** ((f.d - 1) * f.n), guard)
    grid = _grid(Bi, f.n)
    count = _enumerate_tuples(T, [grid] * (f.d - 1), scale, limit, True, workers)
    return AuxCountResult(Fraction(B), count, "NAIVE", time.perf_counter() - start)


def _count_slab(L: list[list[int]], Bi: int, scale: int, limit: int) -> int:
    """Integer ``y`` in ``[-Bi, Bi]^n`` with ``scale*|(L y)_i| < limit`` for every row ``i``."""
    n = len(L)
    rows = [r for r in L if any(r)]
    if not rows:
        return (2 * Bi + 1) ** n if limit > 0 else 0
    # remaining reach of each row once coordinates < k are fixed
    reach = [[Bi * sum(abs(a) for a in r[k:]) for k in range(n + 1)] for r in rows]
    cols = [[r[k] for r in rows] for k in range(n)]
    nrows = len(rows)

    def rec(k: int, partial: list[int]) -> int:
        if k == n - 1:
            lo, hi = -Bi, Bi
            col = cols[k]
            for i in range(nrows):
                a, ps = col[i], partial[i]
                if a == 0:
                    if scale * abs(ps) >= limit:
                        return 0
                    continue
                # -limit < scale*(ps + a*y) < limit
                num_lo = -limit - scale * ps
                num_hi = limit - scale * ps
                den = scale * a
                if den < 0:
                    num_lo, num_hi, den = -num_hi, -num_lo, -den
                lo = max(lo, num_lo // den + 1)
                hi = min(hi, -((-num_hi) // den) - 1)
                if lo > hi:
                    return 0
            return hi - lo + 1
        total = 0
        col = cols[k]
        for y in range(-Bi, Bi + 1):
            nxt = [partial[i] + col[i] * y for i in range(nrows)]
            for i in range(nrows):
                r = reach[i][k + 1]
                if scale * (nxt[i] - r) >= limit or scale * (nxt[i] + r) <= -limit:
                    break
            else:
                total += rec(k + 1, nxt)
        return total

    return rec(0, [0] * nrows)


def _slab_prefixes(n: int, Bi: int, slots: int):
    """Prefix tuples for the outer loop, with multiplicities.

    The count for ``(-x_1, x_2, ...)`` equals the count for ``(x_1, ...)``, so
    the first slot runs over vectors up to sign (the zero vector once).
    """
    grid = [tuple(int(c) for c in v) for v in _grid(Bi, n)]
    if slots == 0:
        return [((), 1)]
    half = [(v, 1 if not any(v) else 2) for v in grid if v >= tuple(-c for c in v)]
    out = []
    for first, w in half:
        for rest in itertools.product(grid, repeat=slots - 1):
            out.append(((first,) + rest, w))
    return out


def _slab_chunk(dense, prefixes, Bi, scale, limit) -> int:
    total = 0
    for prefix, w in prefixes:
        L = dense
        for v in prefix:
            L = np.tensordot(np.array(v, dtype=object), L, axes=(0, 0))
        # L[j, i] is the coefficient of y_j in m_i
        Lrows = [[int(L[j, i]) for j in range(L.shape[0])] for i in range(L.shape[1])]
        total += w * _count_slab(Lrows, Bi, scale, limit)
    return total


def aux_count_slab(f: Form, B, guard: int | None = ENUM_GUARD, workers: int = 1) -> AuxCountResult:
    """``N^aux_f(B)`` by enumerating the first ``d-2`` slots and counting the last by interval backtracking."""
    start = time.perf_counter()
    T, Bi, scale, limit = _prepare(f, B)
    check_guard("aux_count_slab", (2 * Bi + 1) ** ((f.d - 2) * f.n), guard)
    dense = T.dense(dtype=object)
    prefixes = _slab_prefixes(f.n, Bi, f.d - 2)
    parts = split(prefixes, workers)
    counts = map_chunks(_slab_chunk, [(dense, p, Bi, scale, limit) for p in parts], workers)
    return AuxCountResult(Fraction(B), sum(counts), "SLAB", time.perf_counter() - start)


def aux_count(f: Form, B, method: str = "auto", guard: int | None = ENUM_GUARD,
              workers: int = 1) -> AuxCountResult:
    if method == "naive":
        return aux_count_naive(f, B, guard, workers)
    if method in ("slab", "auto"):
        return aux_count_slab(f, B, guard, workers)
    raise ValueError(f"unknown method {method!r}")


def _z_threshold(g: Form, beta, B):
    """Integer tensor and ``(scale, limit)`` for ``|m(g)| <= |beta| B^(d-2)``."""
    L, gi = g.integer_multiple()
    bound = Fraction(max(abs(Fraction(b)) for b in beta)) * Fraction(B) ** (g.d - 2) * L
    return derivative_tensor(gi), bound.denominator, bound.numerator


def dyadic_count(system: FormSystem, beta, T, B, guard: int | None = ENUM_GUARD,
                 workers: int = 1) -> DyadicCell:
    """``#Z(T_1, ..., T_{d-1})`` for ``beta.F`` (non-strict bound ``|beta| B^(d-2)``)."""
    if not any(beta):
        raise ValueError("beta must be nonzero")
    T = tuple(int(t) for t in T)
    if len(T) != system.d - 1 or any(t < 1 for t in T):
        raise ValueError(f"T must be {system.d - 1} integers >= 1")
    n = system.n
    check_guard("dyadic_count", math.prod((4 * t + 1) ** n for t in T), guard)
    g = beta_dot(system, beta)
    if g.is_zero():
        slots = [_shell(t, n) for t in T]
        return DyadicCell(T, math.prod(len(s) for s in slots))
    tensor, scale, limit = _z_threshold(g, beta, B)
    slots = [_shell(t, n) for t in T]
    return DyadicCell(T, _enumerate_tuples(tensor, slots, scale, limit, False, workers))


def z_style_count(system: FormSystem, beta, B, guard: int | None = ENUM_GUARD) -> tuple[int, int]:
    """Tuples with ``|x_k| <= B`` and ``|m(beta.F)| <= |beta| B^(d-2)``.

    Returned as ``(with_some_zero_vector, all_vectors_nonzero)``.
    """
    n, d = system.n, system.d
    Bi = math.floor(Fraction(B))
    check_guard("z_style_count", (2 * Bi + 1) ** ((d - 1) * n), guard)
    tensor, scale, limit = _z_threshold(beta_dot(system, beta), beta, B)
    grid = _grid(Bi, n)
    nonzero = grid[np.abs(grid).max(axis=1) > 0]
    total = _enumerate_tuples(tensor, [grid] * (d - 1), scale, limit, False)
    inner = _enumerate_tuples(tensor, [nonzero] * (d - 1), scale, limit, False)
    return total - inner, inner


def covering_check(system: FormSystem, beta, B) -> dict:
    """Compare the dyadic cover ``1 + sum #Z(2^t)`` (``2^t < B``) with the tuples it must cover.

    Tuples containing a zero vector lie in no cell, so the cover is checked
    against the tuples whose vectors are all nonzero; the degenerate tuples
    are reported separately.
    """
    degenerate, nondegenerate = z_style_count(system, beta, B)
    ts = [t for t in range(64) if 2**t < B]
    cells = {}
    for tt in itertools.product(ts, repeat=system.d - 1):
        cells[tt] = dyadic_count(system, beta, tuple(2**t for t in tt), B).count
    rhs = 1 + sum(cells.values())
    return {
        "B": B,
        "degenerate": degenerate,
        "nondegenerate": nondegenerate,
        "cells": cells,
        "cover": rhs,
        "holds_nondegenerate": nondegenerate <= sum(cells.values()),
        "holds_as_stated": degenerate + nondegenerate <= rhs,
    }


def growth_table(f: Form, Bs, s_candidates, method: str = "slab", workers: int = 1) -> list[GrowthRow]:
    """``N^aux(B)`` and ``N / (B^((d-2)n+s) (log 2B)^(d-1))`` for each candidate ``s``."""
    rows = []
    for B in Bs:
        count = aux_count(f, B, method=method, workers=workers).count
        denom_log = math.log(2 * B) ** (f.d - 1)
        ratios = {s: count / (float(B) ** ((f.d - 2) * f.n + s) * denom_log) for s in s_candidates}
        rows.append(GrowthRow(B, count, ratios))
    return rows


def results_to_csv(results, timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["B", "count", "method", "elapsed_s"])
    for r in results:
        w.writerow([str(r.B), r.count, r.method, f"{r.elapsed:.6f}" if timing else "NA"])
    return buf.getvalue()


def growth_to_csv(rows: list[GrowthRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    ss = sorted(rows[0].ratios) if rows else []
    w.writerow(["B", "count"] + [f"ratio_s{s}" for s in ss])
    for r in rows:
        w.writerow([r.B, r.count] + [repr(r.ratios[s]) for s in ss])
    return buf.getvalue()
