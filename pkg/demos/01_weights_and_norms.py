"""
Weights, normalization and the two norm systems
===============================================

A truncated Köthe matrix is a grid of positive weights a[k, n], one row per
grade.  This walks through the built-in demo grid, repairs a grid that is not
yet normalized, and checks that the sup-norms and Hilbert norms interleave.
"""

import numpy as np

from koethelab import hilbert_norm, koethe_from_config, normalize, sup_norm, verify_conditions
from koethelab.koethe import demo_matrix

# the demo grid: a[k, n] = 4^(e_k n) with e = (0, 1, 3, 7)
m = demo_matrix()
print(m.a)

report = verify_conditions(m)
for name, cond in report.conditions.items():
    print(f"{name:16s} passed={cond.passed}  margin={cond.margin}")
print("row sums of a_k / a_(k+1):", report.conditions["sums"].values)
print("85/256 =", 85 / 256)

# n^(k-1) fails; the normalizer divides by the first row and raises every
# later row by the smallest admissible scalar
raw = koethe_from_config({"family": "power", "exponents": list(range(9)), "N": 8})
print("raw grid passes:", verify_conditions(raw).passed)
fixed, log = normalize(raw)
print("kept raw grades", log.rows, "stopped at", log.stopped_at)
print("scalars", np.array(log.scalars))
print("normalized grid passes:", verify_conditions(fixed).passed)

# |x|_k <= ||x||_k <= |x|_(k+1) on random vectors, every grade
rng = np.random.default_rng(0)
X = rng.standard_normal((m.N, 1000))
for k in range(1, m.K):
    s, h, s1 = sup_norm(m, X, k), hilbert_norm(m, X, k), sup_norm(m, X, k + 1)
    print(f"k={k}: max |x|_k/||x||_k = {np.max(s / h):.4f}, max ||x||_k/|x|_(k+1) = {np.max(h / s1):.4f}")
