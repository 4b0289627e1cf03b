"""Witness-based lower bounds for sigma*, F_p scans and membership in U_{d,n,R}.

``sigma*(H) = n - min rank J(beta.H)(x)`` where the minimum runs over nonzero
``beta`` and nonzero argument vectors with ``m(beta.H)(x) = 0``, over an
algebraic closure.  An explicit rational point with ``m = 0`` and Jacobian
rank ``r`` proves ``sigma* >= n - r``; that is the only direction decided
exactly here.  Scans over ``F_p`` are heuristic evidence.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from ._guards import check_guard
from ._parallel import map_chunks, split
from .forms import FormSystem, beta_dot, derivative_tensor
from .multilinear import (
    TuplePoint,
    eval_m,
    jacobian,
    large_coordinate_subspace,
    last_slot_matrix,
    nullspace_exact,
    nullspace_mod_p,
    rank_exact,
    rank_mod_p,
    sup_norm,
    VERIFY_SLACK,
)

__all__ = [
    "Witness",
    "FpScan",
    "SigmaStarReport",
    "DichotomyCheck",
    "witness_rank",
    "constraint_set_empty",
    "sigma_star_lower_bound",
    "sigma_star_fp_scan",
    "u_membership",
    "default_primes",
    "dichotomy_check",
    "calibrate_c1",
    "CERTIFIED_NOT_IN_U",
    "HEURISTIC_IN_U",
    "VACUOUS_IN_U",
]

CERTIFIED_NOT_IN_U = "CERTIFIED_NOT_IN_U"
HEURISTIC_IN_U = "HEURISTIC_IN_U"
VACUOUS_IN_U = "VACUOUS_IN_U"

DEFAULT_BUDGET = 1000
DEFAULT_PRIME_COUNT = 3
FP_SCAN_GUARD = 10**8
DEFAULT_C1 = Fraction(1, 100)
DEFAULT_C2 = Fraction(1, 100)


def _rat(x) -> str:
    return str(Fraction(x))


@dataclass(frozen=True)
class Witness:
    beta: tuple
    point: TuplePoint
    rank: int

    def verify(self, system: FormSystem) -> bool:
        """Recompute ``m = 0`` and the rank exactly."""
        return witness_rank(system, self.beta, self.point) == self.rank

    def to_dict(self) -> dict:
        return {
            "beta": [_rat(b) for b in self.beta],
            "vectors": [[_rat(x) for x in v] for v in self.point],
            "rank": self.rank,
        }


@dataclass(frozen=True)
class FpScan:
    p: int
    min_rank: int | None
    sigma: int | None
    points: int

    @property
    def empty(self) -> bool:
        return self.min_rank is None

    def to_dict(self) -> dict:
        return {"p": self.p, "min_rank": self.min_rank, "sigma_fp": self.sigma,
                "empty": self.empty, "points": self.points}


@dataclass
class SigmaStarReport:
    """Evidence about ``sigma*`` for one system.

    ``lower_bound`` is ``n - min_rank`` over the witnesses found (0 when none
    was found, the trivial bound) and ``None`` when the constraint set is
    empty.
    """

    n: int
    R: int
    lower_bound: int | None
    verdict: str
    witness: Witness | None
    budget_used: int
    constraint_empty: bool
    fp_scans: list[FpScan] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def min_rank(self) -> int | None:
        return None if self.witness is None else self.witness.rank

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "R": self.R,
            "lower_bound": "VACUOUS" if self.lower_bound is None else self.lower_bound,
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "budget_used": self.budget_used,
            "constraint_empty": self.constraint_empty,
            "fp_scans": [s.to_dict() for s in self.fp_scans],
            "notes": list(self.notes),
        }


def witness_rank(system: FormSystem, beta: Sequence, tup) -> int | None:
    """Jacobian rank at ``(beta, tup)`` if ``m(beta.H)`` vanishes there, else ``None``."""
    if not any(beta):
        raise ValueError("beta must be nonzero")
    tup = tup if isinstance(tup, TuplePoint) else TuplePoint(tuple(tup))
    if any(not any(v) for v in tup):
        raise ValueError("all argument vectors must be nonzero")
    g = beta_dot(system, beta)
    if g.is_zero():
        return 0
    T = derivative_tensor(g)
    if any(eval_m(T, tup)):
        return None
    return rank_exact(jacobian(T, tup))


def constraint_set_empty(system: FormSystem) -> bool:
    """Exact test for emptiness of ``{m(beta.H)(x) = 0}`` over the algebraic closure.

    With ``R >= 2`` a nonzero ``beta`` making the relevant determinant vanish
    always exists; with ``d >= 3`` and ``n >= 2`` the determinant of the
    last-slot matrix is a form of positive degree in at least two variables,
    so it has a nonzero zero.  Only ``R = 1`` with ``n = 1`` or ``d = 2`` and a
    nonsingular second-partials matrix is empty.
    """
    system.require_nonzero()
    if system.R >= 2:
        return False
    if system.n == 1:
        return True
    if system.d == 2:
        T = derivative_tensor(system[0])
        return rank_exact([[T[i, j] for j in range(system.n)] for i in range(system.n)]) == system.n
    return False


# -- witness search ----------------------------------------------------------


def _unit(n, i):
    v = [0] * n
    v[i] = 1
    return tuple(v)


def _support2(n):
    vecs = [_unit(n, i) for i in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        for s in (1, -1):
            v = [0] * n
            v[i], v[j] = 1, s
            vecs.append(tuple(v))
    return vecs


def _probes(system: FormSystem, seed) -> Iterator[tuple]:
    """Deterministic stream of search probes, structured patterns first.

    ``("full", beta, tuple)`` tests one point; ``("last", beta, prefix)``
    solves for every last-slot vector making ``m`` vanish;
    ``("beta", tuple)`` solves for ``beta`` (``R >= 2``).
    """
    n, d, R = system.n, system.d, system.R
    betas = [_unit(R, r) for r in range(R)]
    if R >= 2:
        betas += [v for v in _support2(R) if sum(map(abs, v)) == 2]
    basis = [_unit(n, i) for i in range(n)]
    for pool in (basis, _support2(n)):
        seen_full = set()
        for beta in betas:
            for tup in itertools.combinations_with_replacement(pool, d - 1):
                if pool is not basis and all(v in basis for v in tup):
                    continue
                seen_full.add(tup)
                yield ("full", beta, tup)
            if d == 2 and pool is not basis:
                continue
            for prefix in itertools.combinations_with_replacement(pool, d - 2):
                if pool is not basis and all(v in basis for v in prefix):
                    continue
                yield ("last", beta, prefix)
        if R >= 2:
            for tup in sorted(seen_full):
                yield ("beta", tup)
    rng = np.random.default_rng(seed)
    while True:
        beta = tuple(int(b) for b in rng.integers(-3, 4, size=R))
        if not any(beta):
            continue
        prefix = []
        while len(prefix) < d - 2:
            v = tuple(int(x) for x in rng.integers(-3, 4, size=n))
            if any(v):
                prefix.append(v)
        yield ("last", beta, tuple(prefix))
        if R >= 2:
            tup = []
            while len(tup) < d - 1:
                v = tuple(int(x) for x in rng.integers(-2, 3, size=n))
                if any(v):
                    tup.append(v)
            yield ("beta", tuple(tup))


def _run_probe(system: FormSystem, probe) -> list[Witness]:
    kind = probe[0]
    out = []
    if kind == "full":
        _, beta, tup = probe
        r = witness_rank(system, beta, tup)
        if r is not None:
            out.append(Witness(beta, TuplePoint(tup), r))
    elif kind == "last":
        _, beta, prefix = probe
        g = beta_dot(system, beta)
        if g.is_zero():
            return out
        T = derivative_tensor(g)
        for y in nullspace_exact(last_slot_matrix(T, prefix)):
            tup = TuplePoint(tuple(prefix) + (tuple(y),))
            out.append(Witness(beta, tup, rank_exact(jacobian(T, tup))))
    else:
        _, tup = probe
        cols = [eval_m(derivative_tensor(f), tup) if not f.is_zero() else [0] * system.n
                for f in system.forms]
        rows = [[cols[r][i] for r in range(system.R)] for i in range(system.n)]
        for beta in nullspace_exact(rows):
            r = witness_rank(system, beta, tup)
            if r is not None:
                out.append(Witness(tuple(beta), TuplePoint(tup), r))
    return out


def _best_in_chunk(system: FormSystem, probes: list) -> Witness | None:
    best = None
    for probe in probes:
        for w in _run_probe(system, probe):
            if best is None or w.rank < best.rank:
                best = w
    return best


def _search(system: FormSystem, budget: int, seed, workers: int = 1) -> Witness | None:
    probes = list(itertools.islice(_probes(system, seed), budget))
    chunks = split(probes, workers)
    results = map_chunks(_best_in_chunk, [(system, c) for c in chunks], workers)
    best = None
    # earlier chunks win ties, so the result does not depend on the worker count
    for w in results:
        if w is not None and (best is None or w.rank < best.rank):
            best = w
    return best


def _verdict(system: FormSystem, witness, empty: bool, scans_empty: bool = True) -> str:
    if witness is not None and witness.rank <= system.n - system.R:
        return CERTIFIED_NOT_IN_U
    if witness is None and empty and scans_empty:
        return VACUOUS_IN_U
    return HEURISTIC_IN_U


def sigma_star_lower_bound(system: FormSystem, budget: int = DEFAULT_BUDGET, seed=0,
                           workers: int = 1) -> SigmaStarReport:
    """Search for witnesses and report the best certified lower bound for ``sigma*``.

    Probes run in a fixed order (tuples of standard basis vectors, then
    support-2 vectors with entries in {-1, 0, 1}, then seeded random points),
    each completed by solving the linear conditions in the last slot.  Only
    the first ``budget`` probes are run, so a larger budget never weakens the
    bound.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    system.require_nonzero()
    empty = constraint_set_empty(system)
    witness = None if empty else _search(system, budget, seed, workers)
    if empty:
        lower = None
    elif witness is None:
        lower = 0
    else:
        lower = system.n - witness.rank
    report = SigmaStarReport(
        n=system.n, R=system.R, lower_bound=lower,
        verdict=_verdict(system, witness, empty),
        witness=witness, budget_used=0 if empty else budget, constraint_empty=empty,
    )
    if empty:
        report.notes.append("constraint set is empty over the algebraic closure")
    elif witness is None:
        report.notes.append("no witness found within budget; lower bound 0 is trivial")
    return report


# -- F_p scans ---------------------------------------------------------------


def _projective_points(n: int, p: int) -> Iterator[tuple[int, ...]]:
    """Representatives of ``P^{n-1}(F_p)``: first nonzero coordinate equal to 1."""
    for lead in range(n):
        for tail in itertools.product(range(p), repeat=n - lead - 1):
            yield (0,) * lead + (1,) + tail


def _int_tensor_mod(system: FormSystem, beta, p):
    g = beta_dot(system, beta)
    L, g = g.integer_multiple()
    if L % p == 0:
        raise ValueError(f"coefficient denominators are divisible by {p}")
    return derivative_tensor(g) if not g.is_zero() else None


def sigma_star_fp_scan(system: FormSystem, p: int, guard: int | None = FP_SCAN_GUARD) -> FpScan:
    """Exact minimum Jacobian rank over all ``F_p`` points with ``m(beta.H) = 0``.

    Points are taken up to scaling of ``beta`` and of each argument vector;
    for each ``beta`` and prefix the last vector runs over the ``F_p`` kernel
    of the last-slot matrix, which enumerates every constrained point.
    """
    n, d, R = system.n, system.d, system.R
    check_guard(f"F_{p} scan", p ** (R + (d - 1) * n), guard)
    system.require_nonzero()
    best = None
    points = 0
    for beta in _projective_points(R, p):
        T = _int_tensor_mod(system, beta, p)
        for prefix in itertools.combinations_with_replacement(list(_projective_points(n, p)), d - 2):
            if T is None:
                L = [[0] * n for _ in range(n)]
            else:
                L = last_slot_matrix(T, prefix)
            kernel = nullspace_mod_p(L, p)
            if not kernel:
                continue
            for c in _projective_points(len(kernel), p):
                y = tuple(sum(ci * b[j] for ci, b in zip(c, kernel)) % p for j in range(n))
                points += 1
                if T is None:
                    r = 0
                else:
                    r = rank_mod_p(jacobian(T, TuplePoint(tuple(prefix) + (y,))).entries, p)
                if best is None or r < best:
                    best = r
                    if r == 0:
                        return FpScan(p, 0, n, points)
    return FpScan(p, best, None if best is None else n - best, points)


def default_primes(d: int, count: int = DEFAULT_PRIME_COUNT) -> tuple[int, ...]:
    """The ``count`` smallest primes above ``d``.

    At ``p <= d`` the factor ``d!`` in every diagonal entry of the tensor
    vanishes mod ``p``, so those scans find points for structural reasons.
    """
    out = []
    q = d + 1
    while len(out) < count:
        if q > 1 and all(q % r for r in range(2, math.isqrt(q) + 1)):
            out.append(q)
        q += 1
    return tuple(out)


def u_membership(system: FormSystem, budget: int = DEFAULT_BUDGET, primes=None,
                 seed=0, workers: int = 1, fp_guard: int | None = FP_SCAN_GUARD) -> SigmaStarReport:
    """Decide membership in ``U_{d,n,R}`` at the achievable level of rigour.

    ``CERTIFIED_NOT_IN_U`` is a proof (a replayable witness of rank at most
    ``n - R``).  ``VACUOUS_IN_U`` means the constraint set is empty (exact
    test) and every ``F_p`` scan found no point.  Anything else is
    ``HEURISTIC_IN_U``.  ``primes=None`` scans ``default_primes(d)``.
    """
    if system.n < system.R:
        raise ValueError("membership in U needs n >= R")
    report = sigma_star_lower_bound(system, budget, seed, workers)
    if primes is None:
        primes = default_primes(system.d)
    scans_empty = True
    for p in primes:
        if p <= system.d:
            report.notes.append(f"F_{p} scan at p <= d: d! vanishes mod p, points found there are expected")
        try:
            scan = sigma_star_fp_scan(system, p, guard=fp_guard)
        except Exception as exc:  # guard or bad reduction; recorded, not fatal
            report.notes.append(f"F_{p} scan skipped: {exc}")
            continue
        report.fp_scans.append(scan)
        scans_empty = scans_empty and scan.empty
    report.verdict = _verdict(system, report.witness, report.constraint_empty, scans_empty)
    if report.fp_scans:
        report.notes.append("F_p scans are heuristic evidence for the algebraic closure")
    return report


# -- the Jacobian dichotomy at a concrete point -------------------------------


@dataclass
class DichotomyCheck:
    """Which alternative of the Jacobian dichotomy held at one point.

    ``alternative`` is 1, 2 or ``"FAIL"``.  For 2, ``subspaces[k]`` lists the
    coordinates spanning ``U_{k+1}``.
    """

    alternative: object
    m_norm: float
    threshold: float
    c1: Fraction
    c2: Fraction
    s: int
    subspaces: list[list[int]] = field(default_factory=list)
    bound: float = 0.0
    verified: bool | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "alternative": self.alternative,
            "m_norm": self.m_norm,
            "threshold": self.threshold,
            "c1": _rat(self.c1),
            "c2": _rat(self.c2),
            "s": self.s,
            "subspaces": self.subspaces,
            "bound": self.bound,
            "verified": self.verified,
            "notes": self.notes,
        }


def _normalised_jacobian(T, tup: TuplePoint, beta_norm) -> np.ndarray:
    """``J(gamma, z)`` for ``gamma = beta/|beta|``, ``z_k = x_k/|x_k|`` (block ``k`` rescaled)."""
    n = T.n
    J = jacobian(T, tup).to_float()
    norms = [float(sup_norm(v)) for v in tup]
    total = float(beta_norm) * math.prod(norms)
    for k, nk in enumerate(norms):
        J[:, k * n:(k + 1) * n] *= nk / total
    return J


def verify_dichotomy_check(system: FormSystem, beta, tup, check: DichotomyCheck,
                           samples: int = 100, seed: int = 0) -> bool:
    """Re-check the reported alternative by direct evaluation.

    Alternative 2 is checked in its unnormalised form
    ``|J u| >= c2 |beta| prod|x_i| max_i |u_i|/|x_i|`` on the basis of
    ``U_1 x ... x U_{d-1}`` and ``samples`` random vectors of it.
    """
    tup = tup if isinstance(tup, TuplePoint) else TuplePoint(tuple(tup))
    g = beta_dot(system, beta)
    T = derivative_tensor(g)
    bnorm = float(sup_norm(beta))
    xnorms = [float(sup_norm(v)) for v in tup]
    scale = bnorm * math.prod(xnorms)
    if check.alternative == 1:
        return float(sup_norm(eval_m(T, tup))) >= float(check.c1) * scale
    if check.alternative != 2:
        return False
    n = system.n
    cols = [k * n + j for k, js in enumerate(check.subspaces) for j in js]
    if not cols:
        return True
    J = jacobian(T, tup).to_float()
    basis = np.eye(J.shape[1])[cols]
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((samples, len(cols)))
    vecs = np.vstack([basis, coeffs @ basis])
    lhs = np.abs(vecs @ J.T).max(axis=1)
    weights = np.repeat(1.0 / np.array(xnorms), n)
    rhs = float(check.c2) * scale * np.abs(vecs * weights).max(axis=1)
    return bool(np.all(lhs * (1 + VERIFY_SLACK) >= rhs))


def dichotomy_check(system: FormSystem, beta, tup, c1=DEFAULT_C1, c2=DEFAULT_C2,
                    s: int | None = None, budget: int = DEFAULT_BUDGET) -> DichotomyCheck:
    """Test the two alternatives of the Jacobian dichotomy at ``(beta, tup)``.

    Alternative 1 is ``|m(beta.f)| >= c1 |beta| prod|x_i|``.  Otherwise
    coordinate subspaces ``U_i`` with total dimension ``n - s`` are searched
    on which the Jacobian is bounded below with constant ``c2``.  ``s``
    defaults to the witness lower bound for ``sigma*``, in which case the
    target dimension is ``n - (lower bound)`` and the report says so.
    """
    if not any(beta):
        raise ValueError("beta must be nonzero")
    tup = tup if isinstance(tup, TuplePoint) else TuplePoint(tuple(tup))
    if any(not any(v) for v in tup):
        raise ValueError("all argument vectors must be nonzero")
    c1, c2 = Fraction(c1), Fraction(c2)
    if c1 <= 0 or c2 <= 0:
        raise ValueError("c1 and c2 must be positive")
    notes = []
    if s is None:
        lb = sigma_star_lower_bound(system, budget=budget).lower_bound
        s = 0 if lb is None else lb
        notes.append(f"s = {s} is a witness lower bound for sigma*, not sigma* itself")
    g = beta_dot(system, beta)
    T = derivative_tensor(g)
    bnorm = sup_norm(beta)
    scale = Fraction(bnorm) * math.prod(Fraction(sup_norm(v)) for v in tup)
    m_norm = sup_norm(eval_m(T, tup))
    threshold = c1 * scale
    check = DichotomyCheck(None, float(m_norm), float(threshold), c1, c2, s, notes=notes)
    if m_norm >= threshold:
        check.alternative = 1
    else:
        n = system.n
        k = n - s
        if k <= 0:
            check.alternative = 2
            check.subspaces = [[] for _ in tup]
            check.bound = math.inf
        else:
            J = _normalised_jacobian(T, tup, bnorm)
            S, _, bound, heuristic = large_coordinate_subspace(J, k)
            check.bound = bound
            if heuristic:
                check.notes.append("coordinate subspaces chosen greedily")
            if bound * (1 + VERIFY_SLACK) >= float(c2):
                check.alternative = 2
                check.subspaces = [[j - slot * n for j in S if slot * n <= j < (slot + 1) * n]
                                   for slot in range(len(tup))]
            else:
                check.alternative = "FAIL"
    check.verified = verify_dichotomy_check(system, beta, tup, check)
    return check


def calibrate_c1(system: FormSystem, beta=None, samples: int = 10_000, seed=0) -> float:
    """Smallest observed ``|m(beta.f)| / (|beta| prod|x_i|)`` over random real points.

    Alternative 1 fires at every sampled point for any ``c1`` up to the value
    returned.
    """
    beta = beta if beta is not None else (1,) + (0,) * (system.R - 1)
    T = derivative_tensor(beta_dot(system, beta))
    dense = T.dense(dtype=float)
    rng = np.random.default_rng(seed)
    d, n = system.d, system.n
    xs = rng.uniform(-1, 1, size=(d - 1, samples, n))
    m = np.einsum("a...,za->z...", dense, xs[0])
    for k in range(1, d - 1):
        m = np.einsum("za...,za->z...", m, xs[k])
    ratios = np.abs(m).max(axis=1) / (float(sup_norm(beta)) * np.prod(np.abs(xs).max(axis=2), axis=0))
    return float(ratios.min())
