"""Local densities, the singular series and integral, and the predicted main term.

Standard circle-method normalisations are used:

* the local density at ``p`` to level ``k`` is
  ``#{x mod p^k : F(x) = 0 mod p^k} / p^(k(n-R))`` and the singular series is
  the product of these over primes, truncated at a prime bound;
* the singular integral over a box is the limit as ``eps -> 0`` of
  ``vol{x in box : |F_i(x)| < eps for all i} / (2 eps)^R``.

With these constants the predicted count of zeros in ``P * box`` is
``I * S * P^(n - dR)``.  Everything except the Monte Carlo integral and the
real smooth-point search is exact rational arithmetic.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._guards import GuardExceeded, check_guard
from .forms import Box, Form, FormSystem, partial_derivative
from .multilinear import rank_mod_p

try:
    import gmpy2
except ImportError:  # pragma: no cover - exercised only without gmpy2
    gmpy2 = None

__all__ = [
    "LocalDensity",
    "SingularSeriesEstimate",
    "SingularIntegralEstimate",
    "MainTermPrediction",
    "AsymptoticRow",
    "AsymptoticReport",
    "local_count",
    "singular_series",
    "default_eps_ladder",
    "estimate_scale",
    "singular_integral",
    "predict_main_term",
    "asymptotic_report",
    "find_smooth_real_point",
    "find_smooth_padic_point",
    "hensel_check",
    "primes_up_to",
    "LOCAL_GUARD",
    "STABILITY_TOL",
]

LOCAL_GUARD = 10**9
FAST_PATH_GUARD = 10**7
STABILITY_TOL = Fraction(1, 1000)
DEFAULT_SAMPLES = 100_000
_BATCH = 1 << 15
_CHUNK = 1 << 18


def _frac(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def primes_up_to(bound: int) -> list[int]:
    if bound < 2:
        return []
    sieve = np.ones(bound + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(bound) + 1):
        if sieve[i]:
            sieve[i * i::i] = False
    return [int(p) for p in np.flatnonzero(sieve)]


def _integral(system: FormSystem) -> list[dict]:
    return [f.integer_multiple()[1].as_dict() for f in system]


# --------------------------------------------------------------------------
# local counts


@dataclass(frozen=True)
class LocalDensity:
    p: int
    k: int
    raw: int
    normalized: Fraction
    method: str = "generic"

    def to_dict(self) -> dict:
        return {"p": self.p, "k": self.k, "raw": self.raw,
                "normalized": _frac(self.normalized), "method": self.method}


def _values_mod(form: dict, coords: list[np.ndarray], q: int, pow_tables) -> np.ndarray:
    vals = np.zeros(len(coords[0]), dtype=np.int64)
    for exps, c in form.items():
        term = np.full(len(coords[0]), c % q, dtype=np.int64)
        for i, e in enumerate(exps):
            if e:
                term = term * pow_tables[e][coords[i]] % q
        vals = (vals + term) % q
    return vals


def _generic_count(forms: list[dict], n: int, d: int, q: int) -> int:
    r = np.arange(q, dtype=np.int64)
    pow_tables = [np.ones(q, dtype=np.int64)]
    for _ in range(d):
        pow_tables.append(pow_tables[-1] * r % q)
    total = q**n
    count = 0
    for lo in range(0, total, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        coords = []
        for _ in range(n):
            idx, rem = np.divmod(idx, q)
            coords.append(rem)
        coords.reverse()
        ok = np.ones(len(coords[0]), dtype=bool)
        for f in forms:
            ok &= _values_mod(f, coords, q, pow_tables) == 0
        count += int(np.count_nonzero(ok))
    return count


def _mul(a: int, b: int) -> int:
    if gmpy2 is not None:
        return int(gmpy2.mpz(a) * gmpy2.mpz(b))
    return a * b


def _cyclic_convolve(a: list[int], b: list[int], q: int, R: int) -> list[int]:
    """Exact cyclic convolution over ``(Z/q)^R`` by Kronecker substitution.

    ``a`` and ``b`` are flattened ``(q,)*R`` arrays of non-negative ints.  Each
    array becomes one big integer with a slot per point of ``[0, 2q-1)^R`` wide
    enough that no slot overflows; one multiplication gives every product.
    """
    width = (max(sum(a), 1) * max(sum(b), 1)).bit_length() // 8 + 1
    side = 2 * q - 1
    shape, wide = (q,) * R, (side,) * R
    pos_of = np.ravel_multi_index(np.unravel_index(np.arange(q**R), shape), wide).tolist()

    def pack(arr):
        buf = bytearray(width * side**R)
        for flat, v in enumerate(arr):
            if v:
                pos = pos_of[flat]
                buf[pos * width:(pos + 1) * width] = int(v).to_bytes(width, "little")
        return int.from_bytes(bytes(buf), "little")

    prod = _mul(pack(a), pack(b))
    raw = prod.to_bytes(width * side**R, "little")
    digits = np.unravel_index(np.arange(side**R), wide)
    target_of = np.ravel_multi_index(tuple(dg % q for dg in digits), shape).tolist()
    out = [0] * q**R
    for pos in range(side**R):
        chunk = raw[pos * width:(pos + 1) * width]
        if any(chunk):
            out[target_of[pos]] += int.from_bytes(chunk, "little")
    return out


def _single_histogram(coeffs, d: int, q: int) -> list[int]:
    """Histogram over ``(Z/q)^R`` of ``(a_1 x^d, ..., a_R x^d)`` for ``x mod q``."""
    x = np.arange(q, dtype=np.int64)
    xd = np.ones(q, dtype=np.int64)
    for _ in range(d):
        xd = xd * x % q
    flat = np.zeros(q, dtype=np.int64)
    for a in coeffs:
        flat = flat * q + (a % q) * xd % q
    return np.bincount(flat, minlength=q ** len(coeffs)).tolist()


def _diagonal_count(system: FormSystem, q: int) -> int:
    d, n, R = system.d, system.n, system.R
    cols = list(zip(*[f.integer_multiple()[1].diagonal_coefficients() for f in system]))
    hists = [_single_histogram(c, d, q) for c in cols]
    half = n // 2 if n > 1 else 1

    def fold(hs):
        acc = hs[0]
        for h in hs[1:]:
            acc = _cyclic_convolve(acc, h, q, R)
        return acc

    h1 = fold(hists[:half])
    if half == n:
        return h1[0]
    h2 = fold(hists[half:])
    total = 0
    for flat, c in enumerate(h1):
        if c:
            digits = np.unravel_index(flat, (q,) * R)
            neg = 0
            for v in digits:
                neg = neg * q + (-int(v)) % q
            total += c * h2[neg]
    return total


def local_count(system: FormSystem, p: int, k: int, guard: int | None = LOCAL_GUARD) -> LocalDensity:
    """Exact number of residues ``x mod p^k`` with every ``F_i(x) = 0 mod p^k``.

    Diagonal systems with ``R <= 2`` use cyclic histogram convolution when
    ``p^(kR) <= FAST_PATH_GUARD``; everything else enumerates all ``p^(kn)``
    residues under ``guard``.  Rational forms are first scaled to integral ones.
    """
    if k < 1:
        raise ValueError("level k must be >= 1")
    q = p**k
    n, R = system.n, system.R
    if system.is_diagonal() and R <= 2 and q**R <= FAST_PATH_GUARD:
        raw, method = _diagonal_count(system, q), "diagonal"
    else:
        check_guard(f"local_count p={p} k={k}", q**n, guard)
        raw, method = _generic_count(_integral(system), n, system.d, q), "generic"
    return LocalDensity(p, k, raw, Fraction(raw, q ** (n - R)) if n >= R else Fraction(raw * q ** (R - n)), method)


# --------------------------------------------------------------------------
# singular series


@dataclass(frozen=True)
class PrimeFactor:
    p: int
    levels: tuple[LocalDensity, ...]
    stabilized: bool

    @property
    def k(self) -> int:
        return self.levels[-1].k

    @property
    def factor(self) -> Fraction:
        return self.levels[-1].normalized


@dataclass(frozen=True)
class SingularSeriesEstimate:
    prime_bound: int
    k_max: int
    factors: tuple[PrimeFactor, ...]

    @property
    def primes(self) -> list[int]:
        return [f.p for f in self.factors]

    @property
    def value(self) -> Fraction:
        out = Fraction(1)
        for f in self.factors:
            out *= f.factor
        return out

    @property
    def all_stabilized(self) -> bool:
        return all(f.stabilized for f in self.factors)

    def to_dict(self) -> dict:
        return {
            "prime_bound": self.prime_bound,
            "k_max": self.k_max,
            "value": _frac(self.value),
            "value_float": float(self.value),
            "factors": [
                {"p": f.p, "k": f.k, "factor": _frac(f.factor), "stabilized": f.stabilized,
                 "levels": [lv.to_dict() for lv in f.levels]}
                for f in self.factors
            ],
        }


def _stable(levels: list[LocalDensity]) -> bool:
    if len(levels) < 2:
        return False
    a, b = levels[-1].normalized, levels[-2].normalized
    if a == 0:
        return b == 0
    return abs(a - b) / a <= STABILITY_TOL


def singular_series(system: FormSystem, prime_bound: int = 50, k_max: int = 3,
                    guard: int | None = LOCAL_GUARD) -> SingularSeriesEstimate:
    """Truncated product of local densities over ``p <= prime_bound``.

    Each prime uses the deepest level ``k <= k_max`` that fits the guard; the
    factor is flagged stabilised when the last two levels differ by at most
    ``1e-3`` relatively.  A prime whose level 1 already exceeds the guard
    raises ``GuardExceeded``.
    """
    factors = []
    for p in primes_up_to(prime_bound):
        levels: list[LocalDensity] = []
        for k in range(1, k_max + 1):
            try:
                levels.append(local_count(system, p, k, guard=guard))
            except GuardExceeded:
                if k == 1:
                    raise
                break
        factors.append(PrimeFactor(p, tuple(levels), _stable(levels)))
    return SingularSeriesEstimate(prime_bound, k_max, tuple(factors))


# --------------------------------------------------------------------------
# singular integral


class _FloatSystem:
    """Vectorised float evaluation of a system and its Jacobian."""

    def __init__(self, system: FormSystem):
        self.n, self.R = system.n, system.R
        self.forms = [self._compile(f) for f in system]
        self.grads = [[self._compile(partial_derivative(f, i)) for i in range(self.n)] for f in system]

    @staticmethod
    def _compile(f: Form):
        if not f.monomials:
            return np.zeros((0, f.n), dtype=np.int64), np.zeros(0)
        exps = np.array([m.exps for m in f.monomials], dtype=np.int64)
        coeffs = np.array([float(m.coeff) for m in f.monomials])
        return exps, coeffs

    @staticmethod
    def _eval(compiled, X: np.ndarray) -> np.ndarray:
        exps, coeffs = compiled
        if len(coeffs) == 0:
            return np.zeros(X.shape[0])
        mons = np.prod(X[:, None, :] ** exps[None, :, :], axis=2)
        return mons @ coeffs

    def values(self, X: np.ndarray) -> np.ndarray:
        return np.stack([self._eval(f, X) for f in self.forms], axis=1)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        X = x[None, :]
        return np.array([[self._eval(g, X)[0] for g in row] for row in self.grads])


def _sample_box(box: Box, rng, size: int) -> np.ndarray:
    lo = np.array([float(a) for a, _ in box.intervals])
    hi = np.array([float(b) for _, b in box.intervals])
    return lo + (hi - lo) * rng.random((size, box.n))


def estimate_scale(system: FormSystem, box: Box, samples: int = 10_000, seed=0) -> float:
    """``max_i sup_box |F_i|`` estimated from uniform samples."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5CA1E]))
    X = _sample_box(box, rng, samples)
    return float(np.abs(_FloatSystem(system).values(X)).max())


def default_eps_ladder(system: FormSystem, box: Box, seed=0) -> tuple[float, ...]:
    s = estimate_scale(system, box, seed=seed)
    return tuple(s * t for t in (0.2, 0.1, 0.05, 0.025))


@dataclass(frozen=True)
class SingularIntegralEstimate:
    ladder: tuple[float, ...]
    estimates: tuple[float, ...]
    stderrs: tuple[float, ...]
    value: float
    stderr: float
    samples: int
    seed: int
    fit: str = "eps^2"

    def to_dict(self) -> dict:
        return {
            "ladder": list(self.ladder),
            "estimates": list(self.estimates),
            "stderrs": list(self.stderrs),
            "value": self.value,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
            "fit": self.fit,
        }


def _rung(fs: _FloatSystem, box: Box, eps: float, samples: int, seq: np.random.SeedSequence):
    hits = 0
    batches = seq.spawn(-(-samples // _BATCH))
    left = samples
    for child in batches:
        size = min(_BATCH, left)
        left -= size
        X = _sample_box(box, np.random.default_rng(child), size)
        hits += int(np.count_nonzero(np.all(np.abs(fs.values(X)) < eps, axis=1)))
    vol = float(box.volume)
    frac = hits / samples
    norm = vol / (2 * eps) ** fs.R
    return norm * frac, norm * math.sqrt(frac * (1 - frac) / samples)


def _extrapolate(ladder, ests, errs) -> tuple[float, float]:
    """Weighted least squares ``est = a + b eps^2``; returns ``(a, se(a))``."""
    x = np.array(ladder) ** 2
    y = np.array(ests)
    s = np.array(errs, dtype=float)
    floor = max(s.max(), 1e-300) * 1e-6
    w = 1.0 / np.maximum(s, floor) ** 2
    A = np.stack([np.ones_like(x), x], axis=1)
    cov = np.linalg.inv(A.T @ (A * w[:, None]))
    coef = cov @ (A.T @ (w * y))
    return float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))


def singular_integral(system: FormSystem, box: Box, eps_ladder=None,
                      samples: int = DEFAULT_SAMPLES, seed=0) -> SingularIntegralEstimate:
    """Monte Carlo shell densities on an ``eps`` ladder and their ``eps -> 0`` limit.

    Every rung uses its own ``samples`` uniform points drawn from seeds derived
    from ``seed``, so the result is reproducible bit for bit.  The shell
    density is even in ``eps``, so the limit is a weighted linear fit in
    ``eps^2``.
    """
    if eps_ladder is None:
        eps_ladder = default_eps_ladder(system, box, seed=seed)
    ladder = tuple(float(e) for e in eps_ladder)
    if len(ladder) < 3:
        raise ValueError("eps ladder needs at least 3 rungs")
    if any(e <= 0 for e in ladder) or any(a <= b for a, b in zip(ladder, ladder[1:])):
        raise ValueError("eps ladder must be positive and strictly decreasing")
    if samples < 10_000:
        raise ValueError("at least 10^4 samples per rung are required")
    fs = _FloatSystem(system)
    seqs = np.random.SeedSequence(int(seed)).spawn(len(ladder))
    ests, errs = [], []
    for eps, seq in zip(ladder, seqs):
        e, s = _rung(fs, box, eps, samples, seq)
        ests.append(e)
        errs.append(s)
    value, se = _extrapolate(ladder, ests, errs)
    return SingularIntegralEstimate(ladder, tuple(ests), tuple(errs), value, se, samples, int(seed))


# --------------------------------------------------------------------------
# main term and report


@dataclass(frozen=True)
class MainTermPrediction:
    P: int
    exponent: int
    value: Fraction
    stderr: Fraction

    def to_dict(self) -> dict:
        return {"P": self.P, "exponent": self.exponent, "value": _frac(self.value),
                "value_float": float(self.value), "stderr": float(self.stderr)}


def predict_main_term(system: FormSystem, box: Box, P: int, series, integral) -> MainTermPrediction:
    """``I * S * P^(n - dR)``; the uncertainty comes from the integral only.

    ``series`` and ``integral`` may be estimates or plain numbers.  The float
    integral is converted exactly to a rational, so doubling ``P`` scales the
    prediction by exactly ``2^(n - dR)``.
    """
    S = series.value if isinstance(series, SingularSeriesEstimate) else Fraction(series)
    if isinstance(integral, SingularIntegralEstimate):
        I, se = Fraction(integral.value), Fraction(integral.stderr)
    else:
        I, se = Fraction(integral), Fraction(0)
    e = system.n - system.d * system.R
    scale = Fraction(P) ** e
    return MainTermPrediction(P, e, I * S * scale, abs(se * S * scale))


@dataclass(frozen=True)
class AsymptoticRow:
    P: int
    count: int
    prediction: MainTermPrediction

    @property
    def ratio(self) -> float:
        if self.prediction.value == 0:
            return math.inf if self.count else math.nan
        return float(Fraction(self.count) / self.prediction.value)

    @property
    def distance(self) -> float:
        return abs(self.ratio - 1)


@dataclass
class AsymptoticReport:
    rows: list[AsymptoticRow]
    series: SingularSeriesEstimate
    integral: SingularIntegralEstimate
    real_point: list | None
    padic_points: dict
    sigma_star_verdict: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def distances_nonincreasing(self) -> bool:
        ds = [r.distance for r in self.rows]
        return all(b <= a for a, b in zip(ds, ds[1:]))

    @property
    def real_positivity(self) -> bool:
        return self.real_point is not None

    @property
    def padic_positivity(self) -> bool:
        return all(v is not None for v in self.padic_points.values())

    def to_dict(self) -> dict:
        return {
            "rows": [
                {"P": r.P, "count": r.count, "prediction": _frac(r.prediction.value),
                 "prediction_float": float(r.prediction.value),
                 "prediction_stderr": float(r.prediction.stderr),
                 "ratio": r.ratio, "distance": r.distance}
                for r in self.rows
            ],
            "distances_nonincreasing": self.distances_nonincreasing,
            "real_smooth_point": self.real_point,
            "real_positivity": self.real_positivity,
            "padic_smooth_points": {str(p): v for p, v in self.padic_points.items()},
            "padic_positivity": self.padic_positivity,
            "sigma_star_verdict": self.sigma_star_verdict,
            "series": self.series.to_dict(),
            "integral": self.integral.to_dict(),
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["P", "count", "prediction", "prediction_stderr", "ratio", "distance"])
        for r in self.rows:
            w.writerow([r.P, r.count, repr(float(r.prediction.value)),
                        repr(float(r.prediction.stderr)), repr(r.ratio), repr(r.distance)])
        return buf.getvalue()


def asymptotic_report(system: FormSystem, box: Box, Ps, counts=None, series=None, integral=None,
                      prime_bound: int = 50, k_max: int = 3, samples: int = DEFAULT_SAMPLES,
                      seed=0, sigma_star_verdict: str | None = None, workers: int = 1) -> AsymptoticReport:
    """Exact ``N(P)`` against ``I * S * P^(n-dR)`` for each ``P``.

    ``counts`` may be given as a list aligned with ``Ps``; otherwise they are
    computed with the zero counter.  The positivity hypotheses are checked
    through explicit smooth real and ``p``-adic points (``p <= prime_bound``).
    """
    from .zero_count import zero_count

    Ps = list(Ps)
    if counts is None:
        counts = [zero_count(system, box, P, workers=workers).count for P in Ps]
    if series is None:
        series = singular_series(system, prime_bound, k_max)
    if integral is None:
        integral = singular_integral(system, box, samples=samples, seed=seed)
    rows = [AsymptoticRow(P, c, predict_main_term(system, box, P, series, integral))
            for P, c in zip(Ps, counts)]
    real = find_smooth_real_point(system, box, seed=seed)
    padic = {}
    for p in primes_up_to(prime_bound):
        try:
            padic[p] = find_smooth_padic_point(system, p)
        except GuardExceeded:
            padic[p] = "not scanned (guard)"
    notes = []
    if real is None:
        notes.append("positivity hypothesis failed: no smooth real point found in the box")
    missing = [p for p, v in padic.items() if v is None]
    if missing:
        notes.append(f"mod-p lifting criterion found no smooth residue point for p in {missing} "
                     "(the criterion is sufficient, not necessary, e.g. p = 2 for quadratics)")
    if sigma_star_verdict is not None:
        notes.append(f"sigma* verdict for this system: {sigma_star_verdict}")
    real_list = None if real is None else [float(v) for v in real]
    padic_json = {p: (list(v) if isinstance(v, tuple) else v) for p, v in padic.items()}
    return AsymptoticReport(rows, series, integral, real_list, padic_json, sigma_star_verdict, notes)


# --------------------------------------------------------------------------
# smooth local points


def _coefficient_scale(system: FormSystem) -> float:
    return max(sum(abs(float(m.coeff)) for m in f.monomials) for f in system) or 1.0


def _fit_in_box(x: np.ndarray, box: Box):
    """Largest ``|t|`` with ``t x`` in the box, or ``None``."""
    lo_t, hi_t = -math.inf, math.inf
    tiny = 1e-12 * float(np.abs(x).max())
    for xi, (a, b) in zip(x, box.intervals):
        a, b = float(a), float(b)
        if xi > tiny:
            lo_t, hi_t = max(lo_t, a / xi), min(hi_t, b / xi)
        elif xi < -tiny:
            lo_t, hi_t = max(lo_t, b / xi), min(hi_t, a / xi)
        elif not a <= 0 <= b:
            return None
    if lo_t > hi_t:
        return None
    cands = [t for t in (lo_t, hi_t) if math.isfinite(t) and t != 0]
    if not cands:
        return None
    return max(cands, key=abs)


def find_smooth_real_point(system: FormSystem, box: Box, starts: int = 200, iters: int = 60,
                           seed=0) -> np.ndarray | None:
    """A point of the box where every form vanishes and the Jacobian has rank ``R``.

    Gauss-Newton (minimum-norm steps) from random starts in the box.  A
    converged point is rescaled by the homogeneity of the forms to the
    largest multiple lying in the box; it is accepted when
    ``|F(x)| <= 1e-10 * scale`` and the smallest singular value of the
    Jacobian exceeds ``1e-6 * scale``, where ``scale`` is the largest
    coefficient sum of a form.
    """
    fs = _FloatSystem(system)
    scale = _coefficient_scale(system)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5300]))
    for _ in range(starts):
        x = _sample_box(box, rng, 1)[0]
        for _ in range(iters):
            F = fs.values(x[None, :])[0]
            if np.abs(F).max() <= 1e-14 * scale:
                break
            J = fs.jacobian(x)
            step, *_ = np.linalg.lstsq(J, F, rcond=None)
            x = x - step
            if not np.all(np.isfinite(x)) or np.abs(x).max() > 1e6:
                break
        if not np.all(np.isfinite(x)):
            continue
        t = _fit_in_box(x, box)
        if t is None:
            continue
        y = t * x
        y = np.clip(y, [float(a) for a, _ in box.intervals], [float(b) for _, b in box.intervals])
        if np.abs(fs.values(y[None, :])[0]).max() > 1e-10 * scale:
            continue
        svals = np.linalg.svd(fs.jacobian(y), compute_uv=False)
        if len(svals) == system.R and svals.min() > 1e-6 * scale:
            return y
    return None


def _jacobian_mod(system_int: list[dict], n: int, point, p: int) -> list[list[int]]:
    rows = []
    for f in system_int:
        row = []
        for i in range(n):
            s = 0
            for exps, c in f.items():
                e = exps[i]
                if e:
                    term = c * e
                    for j, ej in enumerate(exps):
                        term *= pow(point[j], ej - (j == i), p)
                    s += term
            row.append(s % p)
        rows.append(row)
    return rows


def find_smooth_padic_point(system: FormSystem, p: int, guard: int | None = 10**7):
    """First residue ``x mod p`` (lexicographic) with ``F(x) = 0`` and Jacobian rank ``R`` mod ``p``.

    By Hensel's lemma such a point lifts to a smooth ``Q_p`` point.
    """
    n = system.n
    check_guard(f"smooth residue scan p={p}", p**n, guard)
    forms = _integral(system)
    r = np.arange(p, dtype=np.int64)
    pow_tables = [np.ones(p, dtype=np.int64)]
    for _ in range(system.d):
        pow_tables.append(pow_tables[-1] * r % p)
    total = p**n
    for lo in range(0, total, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        coords = []
        rest = idx
        for _ in range(n):
            rest, rem = np.divmod(rest, p)
            coords.append(rem)
        coords.reverse()
        ok = np.ones(len(idx), dtype=bool)
        for f in forms:
            ok &= _values_mod(f, coords, p, pow_tables) == 0
        for j in np.flatnonzero(ok):
            point = tuple(int(c[j]) for c in coords)
            if rank_mod_p(_jacobian_mod(forms, n, point, p), p) == system.R:
                return point
    return None


def hensel_check(form: Form, p: int, guard: int | None = 10**7) -> dict:
    """Count the lifts mod ``p^2`` of every smooth zero mod ``p``.

    Returns the number of smooth zeros checked, the expected lift count
    ``p^(n-1)`` and whether every zero had exactly that many lifts.
    """
    n = form.n
    check_guard(f"hensel_check p={p}", p ** (2 * n), guard)
    f = form.integer_multiple()[1].as_dict()
    q = p * p
    expected = p ** (n - 1)
    smooth = 0
    bad = []
    for x in itertools.product(range(p), repeat=n):
        if _scalar_mod(f, x, p) != 0:
            continue
        if all(v == 0 for v in _jacobian_mod([f], n, x, p)[0]):
            continue
        smooth += 1
        lifts = 0
        for t in itertools.product(range(p), repeat=n):
            y = tuple(xi + p * ti for xi, ti in zip(x, t))
            lifts += _scalar_mod(f, y, q) == 0
        if lifts != expected:
            bad.append((x, lifts))
    return {"p": p, "smooth_zeros": smooth, "expected_lifts": expected, "ok": not bad, "failures": bad}


def _scalar_mod(f: dict, x, q: int) -> int:
    s = 0
    for exps, c in f.items():
        term = c
        for xi, e in zip(x, exps):
            term = term * pow(xi, e, q) % q
        s += term
    return s % q
