"""Witness search for sigma* on diagonal cubics and on random dense cubics.

Run: python demos/sigma_star_witnesses.py
"""

from formcount.forms import Form, FormSystem, random_system
from formcount.sigma_star import sigma_star_fp_scan, u_membership

for n in (3, 4, 5, 6):
    F = FormSystem.of(Form.diagonal([1] * n, 3))
    rep = u_membership(F)
    w = rep.witness
    print(f"sum of {n} cubes: {rep.verdict}, sigma* >= {rep.lower_bound}, "
          f"witness rank {w.rank} at {[list(map(str, v)) for v in w.point]}")

print()
for seed in range(1, 6):
    F = random_system(3, 4, 1, 10, seed)
    rep = u_membership(F)
    scans = ", ".join(f"F_{s.p}: min rank {s.min_rank}" for s in rep.fp_scans)
    print(f"dense cubic seed {seed}: {rep.verdict}, search bound {rep.lower_bound}; {scans}")

print()
scan = sigma_star_fp_scan(FormSystem.of(Form.diagonal([1, 1], 3)), 5)
print(f"x1^3 + x2^3 over F_5: min rank {scan.min_rank}, sigma*_F5 = {scan.sigma}, points {scan.points}")
