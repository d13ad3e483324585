"""
A Schmidt basis on the range
============================

The embedding H_inf -> H_1 restricted to range(T) is diagonalized: the f_j
are orthonormal in H_1 and orthogonal in H_inf, with lambda_j = ||f_j||_inf^2.
The partial expansions T_n contract in both norms and approach T
monotonically.
"""

import numpy as np

from koethelab import build_deadend, koethe_from_config
from koethelab.basis import approximation_errors, extract_basis, project_T, range_basis
from koethelab.koethe import weighted_l2
from koethelab.operator import OperatorMatrix, rescale_to_contraction

m = koethe_from_config({"family": "geometric", "base": 2, "exponents": [0, 1, 3, 7, 15], "N": 12})
# backward shift: e_n -> e_(n+1)
T, c = rescale_to_contraction(OperatorMatrix(np.eye(12, k=-1), m))
dd = build_deadend(m)
print("rescale factor c =", c)

sub = range_basis(T)
e = extract_basis(sub, dd)
print("d =", e.d, " Jacobi sweeps =", e.sweeps)
print("lambda_j:")
print(np.array2string(e.lam, precision=4))

G1, Ginf = e.gram1(), e.gram_inf()
print("max |G1 - I|        =", np.abs(G1 - np.eye(e.d)).max())
print("off-diagonal Ginf   =", np.linalg.norm(Ginf - np.diag(np.diag(Ginf))) / np.linalg.norm(Ginf))

rng = np.random.default_rng(3)
X = rng.uniform(-1, 1, (m.N, 500))
Y = T.t @ X
errs = approximation_errors(T, e, X) / dd.inf_hilbert(Y)
for n in (0, 1, 2, 4, 8, e.d):
    Z = project_T(T, e, n)(X)
    r1 = np.max(weighted_l2(m.a[0], Z) / weighted_l2(m.a[0], Y))
    rinf = np.max(dd.inf_hilbert(Z) / dd.inf_hilbert(Y))
    print(f"n={n:2d}  worst H_1 ratio {r1:.4f}  worst H_inf ratio {rinf:.4f}  max rel error {errs[n].max():.3e}")
