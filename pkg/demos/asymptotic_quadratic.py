"""Exact zero counts of a 10-variable indefinite quadratic against I * S * P^8.

Run: python demos/asymptotic_quadratic.py
"""

from formcount.densities import asymptotic_report, singular_integral, singular_series
from formcount.forms import Box, Form, FormSystem
from formcount.sigma_star import u_membership
from formcount.zero_count import count_series

F = FormSystem.of(Form.diagonal([1] * 5 + [-1] * 5, 2))
box = Box.full(10)
Ps = [10, 20, 40, 80]

counts = [r.count for r in count_series(F, box, Ps)]
series = singular_series(F, prime_bound=50, k_max=3)
integral = singular_integral(F, box, samples=100_000, seed=0)
print(f"singular series  S = {float(series.value):.6f} (all primes stabilised: {series.all_stabilized})")
print(f"singular integral I = {integral.value:.3f} +- {integral.stderr:.3f}")
print(f"  rungs: {', '.join(f'{e:.3f}:{v:.2f}' for e, v in zip(integral.ladder, integral.estimates))}")

rep = asymptotic_report(F, box, Ps, counts=counts, series=series, integral=integral,
                        sigma_star_verdict=u_membership(F).verdict)
print()
print(f"{'P':>4} {'N(P)':>22} {'prediction':>24} {'ratio':>8}")
for r in rep.rows:
    print(f"{r.P:>4} {r.count:>22} {float(r.prediction.value):>24.1f} {r.ratio:>8.4f}")
print()
for note in rep.notes:
    print("note:", note)
