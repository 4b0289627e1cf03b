"""Growth of N^aux(B) for diagonal cubics, normalised by B^((d-2)n+s) (log 2B)^(d-1).

Run: python demos/aux_growth.py
"""

from formcount.aux_count import covering_check, growth_table
from formcount.forms import Form, FormSystem

Bs = [2, 4, 8, 16, 32]
for n, ss in ((2, [0, 1]), (3, [0, 1, 2])):
    print(f"sum of {n} cubes")
    print(f"{'B':>4} {'N_aux':>10} " + " ".join(f"{'s=' + str(s):>10}" for s in ss))
    for row in growth_table(Form.diagonal([1] * n, 3), Bs, ss):
        print(f"{row.B:>4} {row.count:>10} " + " ".join(f"{row.ratios[s]:>10.4f}" for s in ss))
    print()

rep = covering_check(FormSystem.of(Form.diagonal([1], 3)), (1,), 8)
print(f"x^3, B=8: tuples with a zero vector {rep['degenerate']}, others {rep['nondegenerate']}, "
      f"dyadic cover 1 + sum #Z = {rep['cover']}")
