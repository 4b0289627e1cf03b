"""Command-line front end: ``formcount <subcommand> FORMFILE [options]``.

Every report starts with a header recording the tool version, the exact
command line, the SHA-256 of the form file, the seed and the worker count
(``#`` comment lines for CSV, a ``header`` object for JSON).  Apart from the
header, output depends only on the form file and the options, so runs with
the same configuration are byte-identical.

Exit codes: 0 success, 1 a ``validate`` check failed, 2 input error,
3 guard exceeded (the estimated cost and the guard are printed).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import shlex
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from ._guards import GuardExceeded
from ._parallel import default_workers

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_GUARD = 3

MAX_SEED = 2**64


class InputError(ValueError):
    pass


# -- argument parsing helpers -----------------------------------------------


def _rationals(text: str) -> list:
    try:
        out = [Fraction(t.strip()) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad number list {text!r}: {exc}") from None
    return [int(x) if x.denominator == 1 else x for x in out]


def _ints(text: str) -> list[int]:
    vals = _rationals(text)
    if any(not isinstance(v, int) for v in vals):
        raise InputError(f"expected integers, got {text!r}")
    return vals


def _vectors(text: str) -> list[list]:
    """``"1,0,0;0,1,0"`` -> two vectors."""
    return [_rationals(part) for part in text.split(";") if part.strip()]


def parse_box(text: str, n: int):
    """``full``, ``cube:h`` or ``a1:b1,a2:b2,...`` (rational ends)."""
    from .forms import Box

    text = text.strip()
    try:
        if text == "full":
            return Box.full(n)
        if text.startswith("cube:"):
            return Box.cube(n, Fraction(text[5:]))
        pairs = []
        for part in text.split(","):
            a, b = part.split(":")
            pairs.append((Fraction(a), Fraction(b)))
        if len(pairs) != n:
            raise InputError(f"box has {len(pairs)} intervals, the forms have n={n}")
        return Box(tuple(pairs))
    except InputError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad box {text!r}: {exc}") from None


def _frac_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# -- output -----------------------------------------------------------------


class Report:
    def __init__(self, args, argv, form_hash: str | None):
        self.args = args
        self.header = {
            "tool": f"formcount {__version__}",
            "command": shlex.join(["formcount", *argv]),
            "form_sha256": form_hash or "-",
            "seed": args.seed,
            "workers": args.workers,
        }
        self.extra: list[str] = []

    def note(self, text: str):
        self.extra.append(text)

    def emit_csv(self, body: str, out):
        for key, val in self.header.items():
            out.write(f"# {key}: {val}\n")
        for line in self.extra:
            out.write(f"# {line}\n")
        out.write(body)

    def emit_json(self, payload, out):
        head = dict(self.header)
        if self.extra:
            head["notes"] = list(self.extra)
        out.write(json.dumps({"header": head, "result": payload}, indent=2) + "\n")

    def emit(self, csv_body: str, payload, out):
        if self.args.format == "json":
            self.emit_json(payload, out)
        else:
            self.emit_csv(csv_body, out)


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _guard(args, default, cost: int | None, err):
    """Guard value for a computation; with ``--unsafe-guard`` print the cost and disable it."""
    if args.unsafe_guard:
        if cost is not None:
            err.write(f"unsafe-guard: estimated cost {cost} (guard {default} disabled)\n")
        return None
    return default


# -- subcommands --------------------------------------------------------------


def _load(args):
    from .forms import loads_system

    try:
        with open(args.formfile, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read form file: {exc}") from None
    system = loads_system(raw.decode("utf-8"))
    return system, hashlib.sha256(raw).hexdigest()


def _select_form(system, args):
    from .forms import beta_dot

    if getattr(args, "beta", None):
        beta = _rationals(args.beta)
        if len(beta) != system.R:
            raise InputError(f"beta needs {system.R} entries")
        return beta_dot(system, beta)
    if not 0 <= args.form < system.R:
        raise InputError(f"--form must be in [0, {system.R})")
    return system[args.form]


def cmd_gen(args, argv, out, err):
    from .forms import dumps_system, random_system

    for name in ("d", "n", "R"):
        if getattr(args, name) < 1:
            raise InputError(f"--{name} must be positive")
    if args.height < 0:
        raise InputError("--height must be non-negative")
    out.write(dumps_system(random_system(args.d, args.n, args.R, args.height, args.seed)))
    return EXIT_OK


def cmd_eval(args, argv, out, err):
    from .forms import derivative_tensor
    from .multilinear import eval_m

    system, h = _load(args)
    rep = Report(args, argv, h)
    point = _rationals(args.point)
    if len(point) != system.n:
        raise InputError(f"point needs {system.n} coordinates")
    vals = system.evaluate(point)
    rows = [[i, str(v)] for i, v in enumerate(vals)]
    payload = {"point": [str(x) for x in point], "values": [str(v) for v in vals]}
    if system.d >= 2:
        euler = []
        for i, f in enumerate(system):
            m = eval_m(derivative_tensor(f), [point] * (system.d - 1))
            euler.append([str(x) for x in m])
        payload["m_diagonal"] = euler
    rep.emit(_csv(rows, ["form", "value"]), payload, out)
    return EXIT_OK


def cmd_tensor(args, argv, out, err):
    from .forms import derivative_tensor, sup_norm_fd
    from .multilinear import eval_m, jacobian

    system, h = _load(args)
    rep = Report(args, argv, h)
    if system.d < 2:
        raise InputError("derivative tensors need d >= 2")
    f = _select_form(system, args)
    T = derivative_tensor(f)
    rep.note(f"norm: {_frac_str(sup_norm_fd(f))}")
    payload = {
        "n": T.n,
        "d": T.d,
        "norm": _frac_str(sup_norm_fd(f)),
        "entries": [{"index": list(k), "value": str(v)} for k, v in sorted(T.entries.items())],
    }
    if args.point:
        tup = _vectors(args.point)
        J = jacobian(T, tup)
        m = eval_m(T, tup)
        payload["m"] = [str(x) for x in m]
        payload["jacobian"] = [[str(x) for x in row] for row in J.entries]
        payload["jacobian_rank"] = J.rank()
        rep.note(f"m: {' '.join(str(x) for x in m)}")
        rep.note(f"jacobian rank: {J.rank()}")
        rep.emit(J.to_csv(), payload, out)
        return EXIT_OK
    rows = [[" ".join(map(str, k)), str(v)] for k, v in sorted(T.entries.items())]
    rep.emit(_csv(rows, ["index", "value"]), payload, out)
    return EXIT_OK


def cmd_sigma_star(args, argv, out, err):
    from .sigma_star import FP_SCAN_GUARD, u_membership

    system, h = _load(args)
    rep = Report(args, argv, h)
    primes = None if args.primes is None else (_ints(args.primes) if args.primes else [])
    fp_guard = None if args.unsafe_guard else FP_SCAN_GUARD
    report = u_membership(system, budget=args.budget, primes=primes, seed=args.seed,
                          workers=args.workers, fp_guard=fp_guard)
    lb = "VACUOUS" if report.lower_bound is None else report.lower_bound
    rows = []
    if report.witness is not None:
        w = report.witness.to_dict()
        rows.append(["witness", " ".join(w["beta"]),
                     ";".join(",".join(v) for v in w["vectors"]), w["rank"], system.n - w["rank"]])
    for s in report.fp_scans:
        rows.append([f"F_{s.p}", "", "", "" if s.min_rank is None else s.min_rank,
                     "" if s.sigma is None else s.sigma])
    for note in report.notes:
        rep.note(note)
    body = (f"verdict: {report.verdict} lower_bound: {lb} budget_used: {report.budget_used}\n"
            + _csv(rows, ["source", "beta", "vectors", "rank", "sigma"]))
    rep.emit(body, report.to_dict(), out)
    return EXIT_OK


def cmd_aux_count(args, argv, out, err):
    from .aux_count import ENUM_GUARD, aux_count, growth_table, growth_to_csv, results_to_csv

    system, h = _load(args)
    rep = Report(args, argv, h)
    if system.d < 2:
        raise InputError("aux counts need d >= 2")
    f = _select_form(system, args)
    Bs = _ints(args.B)
    if not Bs or any(B < 1 for B in Bs):
        raise InputError("--B values must be >= 1")
    worst = max(math.floor(B) for B in Bs)
    guard = _guard(args, ENUM_GUARD, (2 * worst + 1) ** (f.n * (f.d - 1)), err)
    if args.growth_s:
        ss = _ints(args.growth_s)
        rows = growth_table(f, Bs, ss, method="slab" if args.method == "auto" else args.method,
                            workers=args.workers)
        payload = [{"B": str(r.B), "count": r.count, "ratios": {str(s): r.ratios[s] for s in ss}}
                   for r in rows]
        rep.emit(growth_to_csv(rows), payload, out)
        return EXIT_OK
    results = [aux_count(f, B, method=args.method, guard=guard, workers=args.workers) for B in Bs]
    payload = [{"B": str(r.B), "count": r.count, "method": r.method,
                "elapsed_s": r.elapsed if args.timing else None} for r in results]
    rep.emit(results_to_csv(results, timing=args.timing), payload, out)
    return EXIT_OK


def cmd_dyadic(args, argv, out, err):
    from .aux_count import ENUM_GUARD, covering_check, dyadic_count

    system, h = _load(args)
    rep = Report(args, argv, h)
    beta = _rationals(args.beta) if args.beta else [1] + [0] * (system.R - 1)
    if len(beta) != system.R:
        raise InputError(f"beta needs {system.R} entries")
    B = _ints(args.B)
    if len(B) != 1:
        raise InputError("--B takes one integer")
    B = B[0]
    if args.covering:
        res = covering_check(system, beta, B)
        rows = [[" ".join(map(str, (2**t for t in k))), v] for k, v in sorted(res["cells"].items())]
        for key in ("degenerate", "nondegenerate", "cover", "holds_nondegenerate", "holds_as_stated"):
            rep.note(f"{key}: {res[key]}")
        payload = {k: v for k, v in res.items() if k != "cells"}
        payload["B"] = str(B)
        payload["cells"] = [{"T": [2**t for t in k], "count": v} for k, v in sorted(res["cells"].items())]
        rep.emit(_csv(rows, ["T", "count"]), payload, out)
        return EXIT_OK
    if not args.T:
        raise InputError("dyadic needs --T (or --covering)")
    T = _ints(args.T)
    n = system.n
    guard = _guard(args, ENUM_GUARD, math.prod((4 * t + 1) ** n for t in T), err)
    cell = dyadic_count(system, beta, T, B, guard=guard, workers=args.workers)
    payload = {"T": list(cell.T), "B": str(B), "beta": [str(b) for b in beta], "count": cell.count}
    rep.emit(_csv([[" ".join(map(str, cell.T)), cell.count]], ["T", "count"]), payload, out)
    return EXIT_OK


def cmd_zero_count(args, argv, out, err):
    from .zero_count import ENUM_GUARD, SCAN_GUARD, count_series, results_to_csv

    system, h = _load(args)
    rep = Report(args, argv, h)
    box = parse_box(args.box, system.n)
    Ps = _ints(args.P)
    if not Ps or any(P < 1 for P in Ps):
        raise InputError("--P values must be positive integers")
    default = SCAN_GUARD if args.method == "scan" else ENUM_GUARD
    guard = _guard(args, default, max(box.grid_size(P) for P in Ps), err)
    results = count_series(system, box, Ps, method=args.method, guard=guard, workers=args.workers)
    payload = [{"P": r.P, "count": r.count, "method": r.method,
                "elapsed_s": r.elapsed if args.timing else None} for r in results]
    rep.emit(results_to_csv(results, timing=args.timing), payload, out)
    return EXIT_OK


def cmd_densities(args, argv, out, err):
    from .densities import (LOCAL_GUARD, asymptotic_report, local_count, singular_integral,
                            singular_series)

    system, h = _load(args)
    rep = Report(args, argv, h)
    guard = _guard(args, LOCAL_GUARD, None, err)
    if args.local:
        rows, payload = [], []
        for item in args.local.split(","):
            p, k = (int(t) for t in item.split(":"))
            ld = local_count(system, p, k, guard=guard)
            rows.append([p, k, ld.raw, _frac_str(ld.normalized), ld.method])
            payload.append(ld.to_dict())
        rep.emit(_csv(rows, ["p", "k", "raw", "normalized", "method"]), payload, out)
        return EXIT_OK
    box = parse_box(args.box, system.n)
    ladder = _rationals(args.ladder) if args.ladder else None
    series = singular_series(system, args.prime_bound, args.k_max, guard=guard)
    integral = singular_integral(system, box, eps_ladder=ladder, samples=args.samples, seed=args.seed)
    if not args.P:
        rows = [[f.p, f.k, _frac_str(f.factor), f.stabilized] for f in series.factors]
        rep.note(f"singular series: {_frac_str(series.value)} ({float(series.value)!r})")
        rep.note(f"singular integral: {integral.value!r} +- {integral.stderr!r}")
        payload = {"series": series.to_dict(), "integral": integral.to_dict()}
        rep.emit(_csv(rows, ["p", "k", "factor", "stabilized"]), payload, out)
        return EXIT_OK
    verdict = None
    if not args.no_sigma_star:
        from .sigma_star import u_membership

        verdict = u_membership(system, seed=args.seed, workers=args.workers).verdict
    report = asymptotic_report(system, box, _ints(args.P), series=series, integral=integral,
                               prime_bound=args.prime_bound, k_max=args.k_max, seed=args.seed,
                               sigma_star_verdict=verdict, workers=args.workers)
    rep.note(f"singular series: {_frac_str(series.value)} ({float(series.value)!r})")
    rep.note(f"singular integral: {integral.value!r} +- {integral.stderr!r}")
    rep.note(f"distance to 1 non-increasing: {report.distances_nonincreasing}")
    rep.note(f"real smooth point found: {report.real_positivity}")
    rep.note(f"smooth residue points for all primes: {report.padic_positivity}")
    for note in report.notes:
        rep.note(note)
    rep.emit(report.to_csv(), report.to_dict(), out)
    return EXIT_OK


def cmd_validate(args, argv, out, err):
    """Cross-check the engines on small instances of the given system."""
    from .aux_count import aux_count_naive, aux_count_slab
    from .forms import Box, derivative_tensor, evaluate, partial_derivative
    from .multilinear import eval_m
    from .zero_count import zero_count_enum, zero_count_scan

    system, h = _load(args)
    rep = Report(args, argv, h)
    rows = []
    rows.append(["parse", f"n={system.n} d={system.d} R={system.R}", True])
    rng = np.random.default_rng(args.seed)
    if system.d >= 2:
        for i, f in enumerate(system):
            x = [int(v) for v in rng.integers(-5, 6, size=system.n)]
            m = eval_m(derivative_tensor(f), [x] * (system.d - 1))
            grad = [math.factorial(system.d - 1) * evaluate(partial_derivative(f, j), x)
                    for j in range(system.n)]
            rows.append([f"euler form {i}", " ".join(map(str, x)), m == grad])
            for B in range(1, args.B + 1):
                a = aux_count_naive(f, B).count
                b = aux_count_slab(f, B).count
                rows.append([f"aux form {i} B={B}", f"naive={a} slab={b}", a == b])
    box = Box.full(system.n)
    for P in range(1, args.P + 1):
        a = zero_count_enum(system, box, P).count
        b = zero_count_scan(system, box, P).count
        rows.append([f"zeros P={P}", f"enum={a} scan={b}", a == b])
    ok = all(r[2] for r in rows)
    rep.note(f"all checks passed: {ok}")
    payload = {"checks": [{"check": r[0], "detail": r[1], "ok": r[2]} for r in rows], "ok": ok}
    rep.emit(_csv(rows, ["check", "detail", "ok"]), payload, out)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _read_matrix(path: str) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [[float(Fraction(x)) for x in r] for r in csv.reader(fh)
                    if r and not r[0].startswith("#")]
    except (OSError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot read matrix: {exc}") from None
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise InputError("matrix CSV must be a non-empty rectangle")
    return np.array(rows)


def cmd_dichotomy(args, argv, out, err):
    from .multilinear import dichotomy
    from .sigma_star import DEFAULT_C1, DEFAULT_C2, dichotomy_check

    if args.matrix:
        rep = Report(args, argv, hashlib.sha256(open(args.matrix, "rb").read()).hexdigest())
        M = _read_matrix(args.matrix)
        k = args.k if args.k is not None else min(M.shape)
        cert = dichotomy(M, k, args.C)
        rows = [[cert.branch, cert.k, repr(cert.C), repr(cert.constant), repr(cert.bound),
                 " ".join(map(str, cert.indices)), cert.heuristic, cert.verified]]
        body = _csv(rows, ["branch", "k", "C", "constant", "bound", "indices", "heuristic", "verified"])
        rep.emit(body, cert.to_dict(), out)
        return EXIT_OK
    if not args.formfile:
        raise InputError("dichotomy needs a form file (with --beta/--point) or --matrix")
    system, h = _load(args)
    rep = Report(args, argv, h)
    if not args.point:
        raise InputError("dichotomy on a form file needs --point")
    beta = _rationals(args.beta) if args.beta else [1] + [0] * (system.R - 1)
    c1 = Fraction(args.c1) if args.c1 else DEFAULT_C1
    c2 = Fraction(args.c2) if args.c2 else DEFAULT_C2
    check = dichotomy_check(system, beta, _vectors(args.point), c1=c1, c2=c2, s=args.s)
    for note in check.notes:
        rep.note(note)
    rows = [[check.alternative, repr(check.m_norm), repr(check.threshold), check.s,
             ";".join(" ".join(map(str, u)) for u in check.subspaces), repr(check.bound), check.verified]]
    body = _csv(rows, ["alternative", "m_norm", "threshold", "s", "subspaces", "bound", "verified"])
    rep.emit(body, check.to_dict(), out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _workers(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("workers must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="64-bit seed (default 0)")
    common.add_argument("--workers", type=_workers, default=default_workers(),
                        help="worker processes (default: $FORMCOUNT_WORKERS or 1)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--unsafe-guard", action="store_true",
                        help="disable enumeration guards (the estimated cost is printed)")
    common.add_argument("--timing", action="store_true",
                        help="fill elapsed_s columns (output is then not reproducible)")

    p = argparse.ArgumentParser(prog="formcount", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"formcount {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter

    s = sub.add_parser("gen", parents=[common], formatter_class=fmt,
                       help="write a random form file",
                       description="Random system with coefficients uniform in [-height, height]; "
                                   "prints the form file (JSON) without a header.")
    for name in ("d", "n", "R"):
        s.add_argument(f"--{name}", type=int, required=True)
    s.add_argument("--height", type=int, default=5)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("eval", parents=[common], formatter_class=fmt, help="evaluate the forms",
                       description="CSV columns: form, value.")
    s.add_argument("formfile")
    s.add_argument("--point", required=True, help="comma-separated coordinates")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("tensor", parents=[common], formatter_class=fmt,
                       help="derivative tensor, m and the Jacobian",
                       description="CSV columns: index, value (sorted entries of the tensor).\n"
                                   "With --point the Jacobian of m is printed as a CSV matrix.")
    s.add_argument("formfile")
    s.add_argument("--form", type=int, default=0)
    s.add_argument("--beta", help="use beta.F instead of a single form")
    s.add_argument("--point", help="d-1 vectors, e.g. '1,0,0;0,1,0'")
    s.set_defaults(func=cmd_tensor)

    s = sub.add_parser("sigma-star", parents=[common], formatter_class=fmt,
                       help="witness lower bound for sigma* and U membership",
                       description="First line: verdict, lower bound, budget.\n"
                                   "CSV columns: source, beta, vectors, rank, sigma.")
    s.add_argument("formfile")
    s.add_argument("--budget", type=int, default=1000)
    s.add_argument("--primes", default=None,
                   help="primes for F_p scans ('' for none; default: the three smallest primes above d)")
    s.set_defaults(func=cmd_sigma_star)

    s = sub.add_parser("aux-count", parents=[common], formatter_class=fmt,
                       help="auxiliary count N^aux(B)",
                       description="CSV columns: B, count, method, elapsed_s.\n"
                                   "With --growth-s: B, count, one ratio_s<s> column per s.")
    s.add_argument("formfile")
    s.add_argument("--B", required=True, help="comma-separated bounds")
    s.add_argument("--method", choices=("auto", "naive", "slab"), default="auto")
    s.add_argument("--form", type=int, default=0)
    s.add_argument("--beta", help="count for beta.F")
    s.add_argument("--growth-s", help="print a growth table for these exponents s")
    s.set_defaults(func=cmd_aux_count)

    s = sub.add_parser("dyadic", parents=[common], formatter_class=fmt,
                       help="dyadic cell counts #Z(T)",
                       description="CSV columns: T, count.")
    s.add_argument("formfile")
    s.add_argument("--beta")
    s.add_argument("--B", required=True)
    s.add_argument("--T", help="comma-separated T_1..T_{d-1}")
    s.add_argument("--covering", action="store_true", help="check the dyadic cover up to B")
    s.set_defaults(func=cmd_dyadic)

    s = sub.add_parser("zero-count", parents=[common], formatter_class=fmt,
                       help="exact integer zero counts N(P)",
                       description="CSV columns: P, count, method, elapsed_s.\n"
                                   "Box: 'full', 'cube:h' or 'a1:b1,a2:b2,...'.")
    s.add_argument("formfile")
    s.add_argument("--P", required=True, help="comma-separated dilation factors")
    s.add_argument("--box", default="full",
                   help="full, cube:h or a:b,... (write --box=-1:1,... when a bound is negative)")
    s.add_argument("--method", choices=("auto", "enum", "diagonal", "scan"), default="auto")
    s.set_defaults(func=cmd_zero_count)

    s = sub.add_parser("densities", parents=[common], formatter_class=fmt,
                       help="singular series, singular integral and the asymptotic report",
                       description="With --P: CSV columns P, count, prediction, prediction_stderr,\n"
                                   "ratio, distance.  Without: p, k, factor, stabilized.\n"
                                   "With --local p:k,...: p, k, raw, normalized, method.")
    s.add_argument("formfile")
    s.add_argument("--box", default="full",
                   help="full, cube:h or a:b,... (write --box=-1:1,... when a bound is negative)")
    s.add_argument("--P", help="comma-separated P for the asymptotic report")
    s.add_argument("--prime-bound", type=int, default=50)
    s.add_argument("--k-max", type=int, default=3)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--ladder", help="comma-separated decreasing eps values")
    s.add_argument("--local", help="only local counts, e.g. '3:1,3:2'")
    s.add_argument("--no-sigma-star", action="store_true")
    s.set_defaults(func=cmd_densities)

    s = sub.add_parser("validate", parents=[common], formatter_class=fmt,
                       help="cross-check the engines on small instances",
                       description="CSV columns: check, detail, ok.  Exit 1 if a check fails.")
    s.add_argument("formfile")
    s.add_argument("--B", type=int, default=2)
    s.add_argument("--P", type=int, default=2)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("dichotomy", parents=[common], formatter_class=fmt,
                       help="dichotomy certificates",
                       description="Matrix mode (--matrix): branch, k, C, constant, bound, indices,\n"
                                   "heuristic, verified.  Form mode (--point): alternative, m_norm,\n"
                                   "threshold, s, subspaces, bound, verified.")
    s.add_argument("formfile", nargs="?")
    s.add_argument("--matrix", help="CSV matrix file")
    s.add_argument("--k", type=int)
    s.add_argument("--C", type=float, default=1.0)
    s.add_argument("--beta")
    s.add_argument("--point", help="d-1 vectors, e.g. '1,0;0,1'")
    s.add_argument("--c1")
    s.add_argument("--c2")
    s.add_argument("--s", type=int)
    s.set_defaults(func=cmd_dichotomy)
    return p


def run(argv=None, out=None, err=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args, argv, out, err)
    except GuardExceeded as exc:
        err.write(f"guard exceeded: {exc.what}: estimated cost {exc.cost} > guard {exc.limit}\n")
        return EXIT_GUARD
    except (ValueError, OSError) as exc:
        err.write(f"input error: {exc}\n")
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
