"""
The dead-end spaces
===================

Three Banach spaces sit below the whole grading: the Hilbert space with
weight a_inf, its sup-norm twin, and the space with the diagonal weight
b_inf.  Their constants D_k and delta_k are computed here for the demo grid
together with the inequality that maps the diagonal space into H_inf.
"""

import numpy as np

from koethelab import build_deadend
from koethelab.deadend import verify_diagonal_map, verify_inclusions
from koethelab.koethe import demo_matrix
from koethelab.operator import OperatorMatrix, grade_norms, rescale_to_contraction

m = demo_matrix()
dd = build_deadend(m)

print("b_inf  =", dd.b_inf)
print("D      =", dd.D)
print("delta  =", dd.delta, " (K_inf =", dd.K_inf, ")")
print("a_inf  =", dd.a_inf)
k = np.arange(1, dd.K_inf + 1)
print("delta_k 2^k D_(k+2) =", dd.delta * 2.0**k * dd.D[k + 1])

# the coordinate projection onto e_1, e_2 already contracts every grade by 1/2
T = OperatorMatrix(np.diag([1.0, 1.0, 0.0, 0.0]), m)
print("grade norms of |T|:", grade_norms(T))
Tp, c = rescale_to_contraction(T)
print("rescale factor c =", c)

for suite in (verify_diagonal_map(Tp, dd, 1000, 0), verify_inclusions(m, dd, 1000, 1)):
    print(f"\n{suite.name}: passed={suite.passed}")
    for check in suite.checks:
        print("  ", check)
