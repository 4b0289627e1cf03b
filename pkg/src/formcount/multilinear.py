"""Multilinear forms ``m^(f)``, their Jacobian, exact ranks and the matrix dichotomy.

For a form ``f`` of degree ``d`` with derivative tensor ``T``,

    m_i(x1, ..., x_{d-1}) = sum_{j} x1[j1] ... x_{d-1}[j_{d-1}] * T[j1, ..., j_{d-1}, i]

and the Jacobian is the ``n x (d-1)n`` matrix of partials of ``m`` with
respect to all argument coordinates, columns ordered slot by slot.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .forms import DerivativeTensor, Form, derivative_tensor, sup_norm_fd

__all__ = [
    "TuplePoint",
    "RationalMatrix",
    "DichotomyCertificate",
    "eval_m",
    "jacobian",
    "rank_exact",
    "nullspace_exact",
    "rank_mod_p",
    "nullspace_mod_p",
    "last_slot_matrix",
    "aux_inequality_holds",
    "sup_norm",
    "dichotomy",
    "verify_certificate",
    "large_coordinate_subspace",
    "VERIFY_SLACK",
]

VERIFY_SLACK = 1e-9
EXHAUSTIVE_LIMIT = 10**5


def sup_norm(v) -> object:
    return max((abs(x) for x in v), default=0)


@dataclass(frozen=True)
class TuplePoint:
    """``d-1`` argument vectors of common length ``n``."""

    vectors: tuple[tuple, ...]

    def __post_init__(self):
        vecs = tuple(tuple(v) for v in self.vectors)
        object.__setattr__(self, "vectors", vecs)
        if not vecs:
            raise ValueError("a tuple point needs at least one vector")
        n = len(vecs[0])
        if n == 0 or any(len(v) != n for v in vecs):
            raise ValueError("all vectors must have the same positive length")

    @property
    def n(self) -> int:
        return len(self.vectors[0])

    @property
    def arity(self) -> int:
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self):
        return len(self.vectors)

    def __getitem__(self, k):
        return self.vectors[k]


def _as_tuple(tup) -> TuplePoint:
    return tup if isinstance(tup, TuplePoint) else TuplePoint(tuple(tup))


def _check_arity(tensor: DerivativeTensor, tup: TuplePoint):
    if tup.arity != tensor.d - 1:
        raise ValueError(f"tensor of order {tensor.d} needs {tensor.d - 1} vectors, got {tup.arity}")
    if tup.n != tensor.n:
        raise ValueError(f"vectors have length {tup.n}, tensor has n={tensor.n}")


def eval_m(tensor: DerivativeTensor, tup) -> list:
    """The ``n``-vector ``m(x1, ..., x_{d-1})``, exactly."""
    tup = _as_tuple(tup)
    _check_arity(tensor, tup)
    vecs = tup.vectors
    out = [0] * tensor.n
    for i, js, v in tensor.expanded:
        term = v
        for k, j in enumerate(js):
            x = vecs[k][j]
            if not x:
                break
            term *= x
        else:
            out[i] += term
    return out


def jacobian(tensor: DerivativeTensor, tup) -> "RationalMatrix":
    """Jacobian of ``m`` in all argument coordinates; column ``k*n + j`` is slot ``k``, coordinate ``j``."""
    tup = _as_tuple(tup)
    _check_arity(tensor, tup)
    n, slots = tensor.n, tup.arity
    vecs = tup.vectors
    rows = [[0] * (slots * n) for _ in range(n)]
    for i, js, v in tensor.expanded:
        for k in range(slots):
            term = v
            for l, j in enumerate(js):
                if l != k:
                    term *= vecs[l][j]
                    if not term:
                        break
            if term:
                rows[i][k * n + js[k]] += term
    return RationalMatrix(rows)


def last_slot_matrix(tensor: DerivativeTensor, prefix) -> list[list]:
    """Matrix ``L`` with ``m(prefix..., y) = L y`` (linearity in the last slot)."""
    prefix = [tuple(v) for v in prefix]
    if len(prefix) != tensor.d - 2:
        raise ValueError(f"need {tensor.d - 2} prefix vectors")
    n = tensor.n
    L = [[0] * n for _ in range(n)]
    for i, js, v in tensor.expanded:
        term = v
        for k, j in enumerate(js[:-1]):
            term *= prefix[k][j]
            if not term:
                break
        if term:
            L[i][js[-1]] += term
    return L


@dataclass(frozen=True)
class RationalMatrix:
    """Dense matrix of exact rationals (ints where integral)."""

    entries: tuple[tuple, ...]

    def __init__(self, rows):
        rows = tuple(tuple(r) for r in rows)
        if not rows or not rows[0]:
            raise ValueError("matrix dimensions must be positive")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged matrix")
        object.__setattr__(self, "entries", rows)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def column(self, j) -> list:
        return [r[j] for r in self.entries]

    def to_float(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.entries], dtype=float)

    def matvec(self, v) -> list:
        return [sum(a * b for a, b in zip(r, v)) for r in self.entries]

    def rank(self) -> int:
        return rank_exact(self)

    def to_csv(self) -> str:
        return "".join(",".join(str(x) for x in r) + "\n" for r in self.entries)


def _integer_rows(rows) -> list[list[int]]:
    out = []
    for r in rows:
        den = 1
        for x in r:
            if isinstance(x, Fraction):
                den = math.lcm(den, x.denominator)
        out.append([int(x * den) for x in r])
    return out


def rank_exact(M) -> int:
    """Rank over the rationals by Bareiss fraction-free elimination."""
    rows = M.entries if isinstance(M, RationalMatrix) else M
    A = _integer_rows(rows)
    if not A:
        return 0
    m, n = len(A), len(A[0])
    rank, prev = 0, 1
    for c in range(n):
        piv = next((r for r in range(rank, m) if A[r][c]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        p = A[rank][c]
        for r in range(rank + 1, m):
            a = A[r][c]
            row_r, row_p = A[r], A[rank]
            for j in range(c + 1, n):
                row_r[j] = (p * row_r[j] - a * row_p[j]) // prev
            row_r[c] = 0
        prev = p
        rank += 1
        if rank == m:
            break
    return rank


def nullspace_exact(rows) -> list[list[int]]:
    """Basis of the rational kernel of a matrix, each vector scaled to primitive integers."""
    rows = rows.entries if isinstance(rows, RationalMatrix) else rows
    A = [[Fraction(x) for x in r] for r in rows]
    m = len(A)
    n = len(A[0]) if m else 0
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(m):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n
        v[fc] = Fraction(1)
        for row, pc in enumerate(pivots):
            v[pc] = -A[row][fc]
        den = 1
        for x in v:
            den = math.lcm(den, x.denominator)
        iv = [int(x * den) for x in v]
        g = math.gcd(*iv)
        basis.append([x // g for x in iv])
    return basis


def rank_mod_p(rows, p: int) -> int:
    A = [[int(x) % p for x in r] for r in rows]
    m = len(A)
    n = len(A[0]) if m else 0
    rank = 0
    for c in range(n):
        piv = next((i for i in range(rank, m) if A[i][c]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = pow(A[rank][c], -1, p)
        A[rank] = [(x * inv) % p for x in A[rank]]
        for i in range(rank + 1, m):
            f = A[i][c]
            if f:
                A[i] = [(x - f * y) % p for x, y in zip(A[i], A[rank])]
        rank += 1
        if rank == m:
            break
    return rank


def nullspace_mod_p(rows, p: int) -> list[list[int]]:
    """Basis of the kernel over ``F_p`` of an integer matrix (reduced echelon)."""
    A = [[int(x) % p for x in r] for r in rows]
    m = len(A)
    n = len(A[0]) if m else 0
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = pow(A[r][c], -1, p)
        A[r] = [(x * inv) % p for x in A[r]]
        for i in range(m):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [(x - f * y) % p for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    basis = []
    for fc in (c for c in range(n) if c not in pivots):
        v = [0] * n
        v[fc] = 1
        for row, pc in enumerate(pivots):
            v[pc] = (-A[row][fc]) % p
        basis.append(v)
    return basis


def aux_inequality_holds(f: Form, tup, B) -> bool:
    """Whether an integer tuple is counted by ``N^aux_f(B)``.

    All vectors must have sup-norm at most ``B`` and ``|m(f)|_inf`` must be
    strictly below ``|f^[d]| * B^(d-2)``.
    """
    B = Fraction(B)
    if B < 1:
        raise ValueError("B must be at least 1")
    norm = sup_norm_fd(f)
    if norm == 0:
        raise ValueError("the zero form has no auxiliary inequality")
    tup = _as_tuple(tup)
    if any(sup_norm(v) > B for v in tup):
        return False
    m = eval_m(derivative_tensor(f), tup)
    return sup_norm(m) < norm * B ** (f.d - 2)


# -- the real matrix dichotomy ---------------------------------------------

SMALL = "SMALL"
LARGE = "LARGE"


def large_constant(n: int, k: int) -> float:
    """Published constant ``c(m, n) = 1 / (n * binom(n, k))`` of the LARGE branch."""
    return 1.0 / (n * math.comb(n, k))


@dataclass
class DichotomyCertificate:
    """Outcome of :func:`dichotomy` for a fixed ``(M, k, C)``.

    ``basis`` holds ``n - k + 1`` spanning vectors of ``X`` (SMALL) or the
    unit vectors of the chosen coordinates (LARGE).  ``bound`` is the
    guaranteed constant from the construction: the operator bound of ``M`` on
    ``X`` for SMALL, a lower bound of ``|Mv| / |v|`` on ``V`` for LARGE.
    """

    branch: str
    k: int
    C: float
    constant: float
    basis: list[list[float]]
    indices: tuple[int, ...] = ()
    bound: float = 0.0
    heuristic: bool = False
    verified: bool | None = None

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "k": self.k,
            "C": self.C,
            "constant": self.constant,
            "indices": list(self.indices),
            "basis": [list(map(float, v)) for v in self.basis],
            "bound": self.bound,
            "heuristic": self.heuristic,
            "verified": self.verified,
        }


def _inv_inf_norm(A: np.ndarray) -> float:
    """``|A^{-1}|_inf`` (max absolute row sum), ``inf`` for singular ``A``."""
    try:
        inv = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        return math.inf
    if not np.all(np.isfinite(inv)):
        return math.inf
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e13:
        return math.inf
    return float(np.abs(inv).sum(axis=1).max())


def _greedy_pivots(M: np.ndarray, k: int) -> tuple[list[int], list[int]]:
    """Row and column pivots of ``k`` steps of complete-pivoting elimination."""
    A = M.astype(float).copy()
    rows, cols = [], []
    for _ in range(k):
        sub = np.abs(A)
        sub[rows, :] = -1
        sub[:, cols] = -1
        r, c = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[r, c] <= 0:
            break
        rows.append(int(r))
        cols.append(int(c))
        A = A - np.outer(A[:, c], A[r, :]) / A[r, c]
    return rows, cols


def large_coordinate_subspace(M, k: int, exhaustive: bool | None = None):
    """Coordinates ``S`` (``|S| = k``) maximising a certified lower bound of ``|M v| / |v|`` on ``span{e_j : j in S}``.

    For a row set ``R`` with ``M[R, S]`` invertible, ``|v| <= |M[R,S]^{-1}| |M v|``,
    so ``1 / |M[R,S]^{-1}|_inf`` is a valid bound.  Returns
    ``(S, R, bound, heuristic)``; ``bound`` is 0 when no invertible block exists.
    """
    M = np.asarray(M, dtype=float)
    m, n = M.shape
    cost = math.comb(m, k) * math.comb(n, k)
    if exhaustive is None:
        exhaustive = cost <= EXHAUSTIVE_LIMIT
    best = (tuple(range(k)), tuple(range(k)), 0.0)
    if exhaustive:
        for S in itertools.combinations(range(n), k):
            cols = M[:, S]
            if not np.any(cols):
                continue
            for R in itertools.combinations(range(m), k):
                norm = _inv_inf_norm(cols[R, :])
                if norm < math.inf and 1.0 / norm > best[2]:
                    best = (S, R, 1.0 / norm)
        return best[0], best[1], best[2], False
    rows, cols = _greedy_pivots(M, k)
    if len(cols) < k:
        return best[0], best[1], 0.0, True
    S, R = tuple(sorted(cols)), tuple(sorted(rows))
    norm = _inv_inf_norm(M[np.ix_(R, S)])
    return S, R, (1.0 / norm if norm < math.inf else 0.0), True


def _max_volume_minor(M: np.ndarray, size: int, exhaustive: bool):
    m, n = M.shape
    if size == 0:
        return (), (), 1.0
    if not exhaustive:
        rows, cols = _greedy_pivots(M, size)
        if len(rows) < size:
            return tuple(range(size)), tuple(range(size)), 0.0
        R, S = tuple(sorted(rows)), tuple(sorted(cols))
        return R, S, abs(float(np.linalg.det(M[np.ix_(R, S)])))
    best = ((), (), -1.0)
    for R in itertools.combinations(range(m), size):
        rows = M[R, :]
        for S in itertools.combinations(range(n), size):
            v = abs(float(np.linalg.det(rows[:, S])))
            if v > best[2]:
                best = (R, S, v)
    return best


def dichotomy(M, k: int, C: float = 1.0, exhaustive: bool | None = None) -> DichotomyCertificate:
    """Constructive form of the small/large subspace dichotomy for a real ``m x n`` matrix.

    Either an ``(n-k+1)``-dimensional ``X`` with ``|M X|_inf <= |X|_inf / C``
    (SMALL), or ``k`` standard basis vectors spanning ``V`` with
    ``|M v|_inf >= c(m,n) |v|_inf / C`` (LARGE), ``c(m,n) = 1/(n binom(n,k))``.
    The returned certificate has already been re-verified.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    m, n = M.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k must satisfy 1 <= k <= min(m, n) = {min(m, n)}")
    if C < 1:
        raise ValueError("C must be at least 1")
    c = large_constant(n, k)
    if exhaustive is None:
        exhaustive = math.comb(m, k) * math.comb(n, k) <= EXHAUSTIVE_LIMIT
    heuristic = not exhaustive

    S, R, bound, _ = large_coordinate_subspace(M, k, exhaustive=exhaustive)
    if bound * (1 + VERIFY_SLACK) >= c / C:
        basis = [list(np.eye(n)[j]) for j in S]
        cert = DichotomyCertificate(LARGE, k, C, c, basis, tuple(S), bound, heuristic)
    else:
        cert = _small_branch(M, k, C, c, exhaustive)
        cert.heuristic = heuristic
    cert.verified = verify_certificate(M, cert)
    return cert


def _small_branch(M: np.ndarray, k: int, C: float, c: float, exhaustive: bool) -> DichotomyCertificate:
    m, n = M.shape
    R1, S1, vol = _max_volume_minor(M, k - 1, exhaustive)
    if vol == 0.0:
        # rank < k-1: the kernel alone is large enough
        _, sv, vt = np.linalg.svd(M)
        basis = [list(v) for v in vt[::-1][: n - k + 1]]
        return DichotomyCertificate(SMALL, k, C, c, basis, (), 0.0)
    free = [j for j in range(n) if j not in S1]
    A1 = M[np.ix_(R1, S1)]
    basis = []
    for j in free:
        x = np.zeros(n)
        x[j] = 1.0
        if S1:
            x[list(S1)] = -np.linalg.solve(A1, M[list(R1), j])
        basis.append(list(x))
    # x = basis^T x_free, so |M x|_inf <= |M basis^T|_inf |x_free|_inf <= |M basis^T|_inf |x|_inf
    schur = M @ np.array(basis).T
    bound = float(np.abs(schur).sum(axis=1).max())
    return DichotomyCertificate(SMALL, k, C, c, basis, tuple(free), bound)


def verify_certificate(M, cert: DichotomyCertificate, samples: int = 100, seed: int = 0) -> bool:
    """Re-check the certificate's inequality on its basis plus random unit vectors of its subspace."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    B = np.array(cert.basis, dtype=float).reshape(len(cert.basis), M.shape[1])
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((samples, len(B)))
    coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    vecs = np.vstack([B, coeffs @ B]) if len(B) else np.zeros((0, M.shape[1]))
    lhs = np.abs(vecs @ M.T).max(axis=1) if vecs.size else np.zeros(0)
    norms = np.abs(vecs).max(axis=1) if vecs.size else np.zeros(0)
    if cert.branch == SMALL:
        return bool(np.all(lhs <= norms / cert.C * (1 + VERIFY_SLACK) + 1e-12))
    return bool(np.all(lhs * (1 + VERIFY_SLACK) >= cert.constant / cert.C * norms))
