"""
The cone argument and a uniform bound on T_n
============================================

For a grade r the nonnegative operator A = J_r |T'| J_r' Q has G_r norm
nu <= 1/2, so B = I - A has a nonnegative inverse and the cone
{x >= 0 : x >= A x} is total.  Interpolating between the two endpoint
inequalities yields a constant C(r), and with it |T_n x|_r <= 8 C(r) |x|_(r+3)
for every n.
"""

import numpy as np

from koethelab import build_deadend, koethe_from_config, sup_norm
from koethelab.basis import extract_basis, range_basis
from koethelab.cone import (
    C_stability,
    build_context,
    decompose,
    equicontinuity_check,
    estimate_C,
    hypothesis_checks,
)
from koethelab.deadend import valid_cone_grades
from koethelab.operator import OperatorMatrix, rescale_to_contraction

m = koethe_from_config({"family": "geometric", "base": 2, "exponents": [0, 1, 3, 7, 15], "N": 12})
T, _ = rescale_to_contraction(OperatorMatrix(np.eye(12, k=-1), m))
dd = build_deadend(m)
e = extract_basis(range_basis(T), dd)
print("valid grades:", valid_cone_grades(dd))

for r in valid_cone_grades(dd):
    ctx = build_context(m, dd, T, r)
    print(f"\nr = {r}: nu = {ctx.nu:.6f}, |B^-1| = {ctx.Binv_norm:.6f}, Neumann terms {ctx.neumann_terms}")

    x = np.random.default_rng(r).uniform(-1, 1, m.N) / ctx.weights
    y, z = decompose(ctx, x)
    print("  |x|_r, |y|_r, |z|_r =", sup_norm(m, x, r), sup_norm(m, y, r), sup_norm(m, z, r))
    print("  hypotheses pass:", hypothesis_checks(ctx, 200, r).passed)

    est = estimate_C(ctx, e, 200, 0)
    eq = equicontinuity_check(m, e, T, est.value, r, 1000, r)
    print(f"  C_hat = {est.value:.6g} (worst n = {est.argmax_n}), bound 8 C_hat = {8 * est.value:.6g}")
    print(f"  sup |T_n x|_r / |x|_(r+3) = {eq['sampled_sup'].worst_ratio:.6g}")
    stab = C_stability(m, dd, T, e, r, [6, 9, 12], [0, 1, 2], 200)
    print(f"  C_hat spread over N' in (6, 9, 12) and 3 seeds: {stab['spread']:.2e}")
