"""Local solution counts, their normalised densities and Hensel lifting.

Run: python demos/local_densities.py
"""

from formcount.densities import hensel_check, local_count, singular_series
from formcount.forms import Form, FormSystem, random_system

xy = FormSystem.of(Form.from_dict(2, 2, {(1, 1): 1}))
q10 = FormSystem.of(Form.diagonal([1] * 5 + [-1] * 5, 2))

for name, F in (("x1*x2", xy), ("10-variable quadratic", q10)):
    print(name)
    for p in (2, 3, 5):
        levels = [local_count(F, p, k) for k in (1, 2, 3)]
        print(f"  p={p}: " + ", ".join(f"k={lv.k} raw={lv.raw} density={float(lv.normalized):.6f}"
                                        for lv in levels))

S = singular_series(q10, prime_bound=50)
unstable = [f.p for f in S.factors if not f.stabilized]
print(f"\nS(quadratic) over p <= 50: {float(S.value):.6f}, primes not stabilised at k=3: {unstable}")

print()
for n, p in ((2, 13), (3, 5), (3, 11)):
    f = random_system(3, n, 1, 6, n * p)[0]
    rep = hensel_check(f, p)
    print(f"random cubic n={n} p={p}: {rep['smooth_zeros']} smooth zeros, "
          f"each with {rep['expected_lifts']} lifts: {rep['ok']}")
