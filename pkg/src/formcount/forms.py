"""Integral homogeneous forms, systems of forms and their derivative tensors.

Forms are immutable.  Coefficients are Python ints (or ``Fraction`` for
rational linear combinations); zero coefficients are never stored and the
monomials are kept in strict lexicographic order of their exponent vectors,
so two equal forms compare equal and serialise identically.

Variable indices are 0-based throughout the package.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Monomial",
    "Form",
    "FormSystem",
    "DerivativeTensor",
    "Box",
    "evaluate",
    "partial_derivative",
    "derivative_tensor",
    "sup_norm_fd",
    "beta_dot",
    "coefficient_count",
    "exponent_vectors",
    "random_system",
    "dumps_system",
    "loads_system",
]


def _normalise(c):
    """Return ``c`` as an int when it is integral, else as a Fraction."""
    if isinstance(c, int):
        return c
    c = Fraction(c)
    return c.numerator if c.denominator == 1 else c


class Monomial(NamedTuple):
    exps: tuple[int, ...]
    coeff: int | Fraction


@dataclass(frozen=True)
class Form:
    """A homogeneous polynomial of degree ``d`` in ``n`` variables.

    Build forms with :meth:`from_terms` (or :meth:`from_dict`) rather than the
    raw constructor; those collect like terms and drop zeros.
    """

    n: int
    d: int
    monomials: tuple[Monomial, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a form needs at least one variable")
        if self.d < 0:
            raise ValueError("degree must be non-negative")
        prev = None
        for mono in self.monomials:
            if len(mono.exps) != self.n:
                raise ValueError(f"exponent vector {mono.exps} has wrong length")
            if any(e < 0 for e in mono.exps) or sum(mono.exps) != self.d:
                raise ValueError(f"monomial {mono.exps} is not of degree {self.d}")
            if mono.coeff == 0:
                raise ValueError("zero coefficients are not stored")
            if prev is not None and not prev < mono.exps:
                raise ValueError("monomials must be strictly lexicographically ordered")
            prev = mono.exps

    @classmethod
    def from_terms(cls, n: int, d: int, terms: Iterable[tuple[Sequence[int], object]]) -> "Form":
        acc: dict[tuple[int, ...], object] = {}
        for exps, coeff in terms:
            exps = tuple(int(e) for e in exps)
            acc[exps] = acc.get(exps, 0) + _normalise(coeff)
        monos = tuple(
            Monomial(e, _normalise(c)) for e, c in sorted(acc.items()) if c != 0
        )
        return cls(n, d, monos)

    @classmethod
    def from_dict(cls, n: int, d: int, coeffs: dict) -> "Form":
        return cls.from_terms(n, d, coeffs.items())

    @classmethod
    def zero(cls, n: int, d: int) -> "Form":
        return cls(n, d, ())

    @classmethod
    def diagonal(cls, coeffs: Sequence[int], d: int) -> "Form":
        """``sum(a_i * x_i**d)``."""
        n = len(coeffs)
        terms = []
        for i, a in enumerate(coeffs):
            exps = [0] * n
            exps[i] = d
            terms.append((exps, a))
        return cls.from_terms(n, d, terms)

    def is_zero(self) -> bool:
        return not self.monomials

    def as_dict(self) -> dict:
        return {m.exps: m.coeff for m in self.monomials}

    def is_integral(self) -> bool:
        return all(isinstance(m.coeff, int) for m in self.monomials)

    def is_diagonal(self) -> bool:
        return all(max(m.exps) == self.d for m in self.monomials)

    def diagonal_coefficients(self) -> list:
        """Coefficients ``a_i`` of a diagonal form (0 for absent variables)."""
        if not self.is_diagonal():
            raise ValueError("form is not diagonal")
        out = [0] * self.n
        for m in self.monomials:
            out[m.exps.index(self.d)] = m.coeff
        return out

    def integer_multiple(self) -> tuple[int, "Form"]:
        """Return ``(L, L*self)`` with ``L*self`` integral and ``L >= 1`` minimal."""
        den = 1
        for m in self.monomials:
            if isinstance(m.coeff, Fraction):
                den = math.lcm(den, m.coeff.denominator)
        if den == 1:
            return 1, self
        return den, self.scale(den)

    def scale(self, t) -> "Form":
        return Form.from_terms(self.n, self.d, ((m.exps, m.coeff * t) for m in self.monomials))

    def __add__(self, other: "Form") -> "Form":
        if (self.n, self.d) != (other.n, other.d):
            raise ValueError("forms disagree on (n, d)")
        return Form.from_terms(self.n, self.d, itertools.chain(self.monomials, other.monomials))

    def __call__(self, point):
        return evaluate(self, point)

    def __str__(self):
        if not self.monomials:
            return "0"
        parts = []
        for exps, c in self.monomials:
            vars_ = "*".join(
                f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}" for i, e in enumerate(exps) if e
            )
            parts.append(f"{c}*{vars_}" if vars_ else str(c))
        return " + ".join(parts)

    @cached_property
    def _tensor(self) -> "DerivativeTensor":
        return _build_tensor(self)


@dataclass(frozen=True)
class FormSystem:
    """``R`` forms sharing ``n`` and ``d``."""

    forms: tuple[Form, ...]

    def __post_init__(self):
        object.__setattr__(self, "forms", tuple(self.forms))
        if not self.forms:
            raise ValueError("a system needs at least one form")
        n, d = self.forms[0].n, self.forms[0].d
        if any((f.n, f.d) != (n, d) for f in self.forms):
            raise ValueError("all forms in a system must share n and d")

    @classmethod
    def of(cls, *forms: Form) -> "FormSystem":
        return cls(tuple(forms))

    @property
    def R(self) -> int:
        return len(self.forms)

    @property
    def n(self) -> int:
        return self.forms[0].n

    @property
    def d(self) -> int:
        return self.forms[0].d

    def __iter__(self):
        return iter(self.forms)

    def __getitem__(self, i) -> Form:
        return self.forms[i]

    def is_diagonal(self) -> bool:
        return all(f.is_diagonal() for f in self.forms)

    def require_nonzero(self):
        """Raise unless every member form is nonzero of exact degree ``d >= 2``."""
        if self.d < 2:
            raise ValueError("forms of degree >= 2 are required")
        for i, f in enumerate(self.forms):
            if f.is_zero():
                raise ValueError(f"form {i} is the zero form")

    def evaluate(self, point) -> list:
        return [evaluate(f, point) for f in self.forms]


class DerivativeTensor:
    """Symmetric table of the constant ``d``-th partial derivatives of a form.

    Entries are keyed by sorted index tuples; indexing with an unsorted tuple
    sorts it first.  Missing keys are zero.
    """

    __slots__ = ("n", "d", "entries", "__dict__")

    def __init__(self, n: int, d: int, entries: dict[tuple[int, ...], object]):
        self.n = n
        self.d = d
        self.entries = {k: v for k, v in entries.items() if v != 0}

    def __getitem__(self, idx) -> int | Fraction:
        key = tuple(sorted(idx))
        if len(key) != self.d:
            raise IndexError(f"tensor of order {self.d} indexed with {len(key)} indices")
        return self.entries.get(key, 0)

    def __eq__(self, other):
        return (
            isinstance(other, DerivativeTensor)
            and (self.n, self.d) == (other.n, other.d)
            and self.entries == other.entries
        )

    def __repr__(self):
        return f"DerivativeTensor(n={self.n}, d={self.d}, entries={self.entries!r})"

    def max_abs(self):
        return max((abs(v) for v in self.entries.values()), default=0)

    @cached_property
    def expanded(self) -> tuple[tuple[int, tuple[int, ...], object], ...]:
        """All distinct index orderings as ``(i, (j_1..j_{d-1}), value)``.

        ``i`` is the last index (the component of the multilinear map) and the
        ``j_k`` are the argument slots.
        """
        out = []
        for key, v in self.entries.items():
            for perm in sorted(set(itertools.permutations(key))):
                out.append((perm[-1], perm[:-1], v))
        return tuple(out)

    def dense(self, dtype=object) -> np.ndarray:
        arr = np.zeros((self.n,) * self.d, dtype=dtype)
        for i, js, v in self.expanded:
            arr[js + (i,)] = v
        return arr


def _build_tensor(form: Form) -> DerivativeTensor:
    entries = {}
    for exps, c in form.monomials:
        key = tuple(i for i, e in enumerate(exps) for _ in range(e))
        mult = 1
        for e in exps:
            mult *= math.factorial(e)
        entries[key] = _normalise(mult * c)
    return DerivativeTensor(form.n, form.d, entries)


@dataclass(frozen=True)
class Box:
    """Closed box ``prod [a_i, b_i]`` inside ``[-1, 1]^n`` with rational ends."""

    intervals: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        ivs = tuple((Fraction(a), Fraction(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        if not ivs:
            raise ValueError("empty box")
        for a, b in ivs:
            if not (-1 <= a <= b <= 1):
                raise ValueError(f"interval [{a}, {b}] not inside [-1, 1]")

    @classmethod
    def full(cls, n: int) -> "Box":
        return cls(((-1, 1),) * n)

    @classmethod
    def cube(cls, n: int, half_width) -> "Box":
        h = Fraction(half_width)
        return cls(((-h, h),) * n)

    @property
    def n(self) -> int:
        return len(self.intervals)

    @property
    def volume(self) -> Fraction:
        v = Fraction(1)
        for a, b in self.intervals:
            v *= b - a
        return v

    def has_short_sides(self) -> bool:
        """Whether every side has length at most 1 (the asymptotic theorem's hypothesis)."""
        return all(b - a <= 1 for a, b in self.intervals)

    def is_symmetric_cube(self) -> bool:
        a0, b0 = self.intervals[0]
        return a0 == -b0 and all((a, b) == (a0, b0) for a, b in self.intervals)

    def integer_ranges(self, P: int) -> list[tuple[int, int]]:
        """Integer coordinate ranges ``[ceil(P a_i), floor(P b_i)]`` of ``P * box``."""
        out = []
        for a, b in self.intervals:
            lo = math.ceil(P * a)
            hi = math.floor(P * b)
            out.append((lo, hi))
        return out

    def grid_size(self, P: int) -> int:
        size = 1
        for lo, hi in self.integer_ranges(P):
            size *= max(0, hi - lo + 1)
        return size

    def contains(self, point) -> bool:
        return all(a <= x <= b for x, (a, b) in zip(point, self.intervals))

    def to_list(self) -> list[list[str]]:
        return [[str(a), str(b)] for a, b in self.intervals]


def evaluate(form: Form, point) -> int | Fraction:
    """Exact value of ``form`` at ``point``."""
    if len(point) != form.n:
        raise ValueError(f"point has {len(point)} coordinates, form has {form.n} variables")
    pt = [x if isinstance(x, int) else Fraction(x) for x in point]
    total = 0
    for exps, c in form.monomials:
        term = c
        for x, e in zip(pt, exps):
            if e:
                term *= x**e
        total += term
    return _normalise(total)


def partial_derivative(form: Form, i: int) -> Form:
    """Formal partial derivative with respect to variable ``i`` (0-based)."""
    if not 0 <= i < form.n:
        raise IndexError(f"variable index {i} out of range for n={form.n}")
    if form.d == 0:
        return Form.zero(form.n, 0)
    terms = []
    for exps, c in form.monomials:
        e = exps[i]
        if e:
            new = list(exps)
            new[i] -= 1
            terms.append((new, c * e))
    return Form.from_terms(form.n, form.d - 1, terms)


def derivative_tensor(form: Form) -> DerivativeTensor:
    """The symmetric tensor of ``d``-th partials; entry for multiplicities ``b`` is ``b! c_b``."""
    if form.d < 2:
        raise ValueError("derivative tensors are defined for degree >= 2")
    return form._tensor


def sup_norm_fd(form: Form) -> Fraction:
    """``(1/d!) * max |d-th partial|``, exactly."""
    if form.d < 2:
        raise ValueError("degree must be at least 2")
    return Fraction(derivative_tensor(form).max_abs()) / math.factorial(form.d)


def beta_dot(system: FormSystem, beta: Sequence) -> Form:
    """The linear combination ``sum(beta_r * F_r)``."""
    if len(beta) != system.R:
        raise ValueError(f"beta has length {len(beta)}, system has R={system.R}")
    terms = []
    for b, f in zip(beta, system.forms):
        b = _normalise(b)
        if b:
            terms.extend((m.exps, m.coeff * b) for m in f.monomials)
    return Form.from_terms(system.n, system.d, terms)


def coefficient_count(d: int, n: int) -> int:
    """Number of monomials of degree ``d`` in ``n`` variables."""
    if d < 0 or n < 1:
        raise ValueError("need d >= 0 and n >= 1")
    return math.comb(n + d - 1, d)


def exponent_vectors(n: int, d: int) -> list[tuple[int, ...]]:
    """All exponent vectors of total degree ``d``, lexicographically sorted."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), d):
        exps = [0] * n
        for i in combo:
            exps[i] += 1
        out.append(tuple(exps))
    return sorted(out)


def random_system(d: int, n: int, R: int, height: int, seed) -> FormSystem:
    """``R`` dense forms with i.i.d. uniform coefficients in ``[-height, height]``."""
    if height < 0:
        raise ValueError("height must be non-negative")
    rng = np.random.default_rng(seed)
    exps = exponent_vectors(n, d)
    forms = []
    for _ in range(R):
        coeffs = rng.integers(-height, height, size=len(exps), endpoint=True)
        forms.append(Form.from_terms(n, d, zip(exps, (int(c) for c in coeffs))))
    return FormSystem(tuple(forms))


# -- form files ------------------------------------------------------------


def system_to_json(system: FormSystem) -> dict:
    return {
        "n": system.n,
        "d": system.d,
        "R": system.R,
        "forms": [
            {
                "monomials": [
                    {"exps": list(m.exps), "coeff": str(m.coeff)} for m in f.monomials
                ]
            }
            for f in system.forms
        ],
    }


def dumps_system(system: FormSystem) -> str:
    return json.dumps(system_to_json(system), indent=2) + "\n"


class FormFileError(ValueError):
    """A form file does not follow the interchange format."""


def system_from_json(obj) -> FormSystem:
    try:
        n, d, R = int(obj["n"]), int(obj["d"]), int(obj["R"])
        raw_forms = obj["forms"]
        if len(raw_forms) != R:
            raise FormFileError(f"R={R} but {len(raw_forms)} forms given")
        forms = []
        for rf in raw_forms:
            terms = []
            for mono in rf["monomials"]:
                coeff = mono["coeff"]
                if not isinstance(coeff, str):
                    raise FormFileError("coefficients must be decimal strings")
                terms.append((mono["exps"], Fraction(coeff)))
            forms.append(Form.from_terms(n, d, terms))
        return FormSystem(tuple(forms))
    except FormFileError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise FormFileError(f"malformed form file: {exc}") from exc


def loads_system(text: str) -> FormSystem:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormFileError(f"not valid JSON: {exc}") from exc
    return system_from_json(obj)
