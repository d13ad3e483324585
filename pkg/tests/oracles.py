"""Independent reference computations used to freeze expected values.

Nothing here imports the library's numerics: exact checks use Fraction,
high-precision sums use mpmath, and operator norms are found by brute force
over the vertices of the unit box.
"""
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np

mpmath.mp.dps = 60


def demo_grid_exact():
    """``4^(e_k n)`` for ``e = (0, 1, 3, 7)`` and ``n = 1..4`` as exact integers."""
    return [[Fraction(4) ** (e * n) for n in range(1, 5)] for e in (0, 1, 3, 7)]


def conditions_exact(grid):
    """The four normalization conditions evaluated in exact rational arithmetic."""
    a = [[Fraction(v) for v in row] for row in grid]
    K, N = len(a), len(a[0])
    c1 = all(v == 1 for v in a[0])
    c2 = all(a[k][n] ** 2 <= a[k + 1][n] for k in range(K - 1) for n in range(N))
    sums = [sum(a[k][n] / a[k + 1][n] for n in range(N)) for k in range(K - 1)]
    c3 = all(s <= 1 for s in sums)
    c4 = all(
        a[k][n] / a[k + 1][n] >= a[k][n + 1] / a[k + 1][n + 1]
        for k in range(K - 1)
        for n in range(N - 1)
    )
    return {"unit_first_row": c1, "squares": c2, "sums": c3, "ratio_decay": c4}, sums


def exact_rank(rows):
    """Rank of an integer or rational matrix by Gaussian elimination over Q."""
    M = [[Fraction(v) for v in row] for row in rows]
    rank, ncols = 0, len(M[0]) if M else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for i in range(len(M)):
            if i != rank and M[i][col] != 0:
                f = M[i][col] / M[rank][col]
                M[i] = [x - f * y for x, y in zip(M[i], M[rank])]
        rank += 1
    return rank


def mp_weighted_l2(w, x):
    return mpmath.sqrt(mpmath.fsum((mpmath.mpf(float(wi)) * mpmath.mpf(float(xi))) ** 2 for wi, xi in zip(w, x)))


def deadend_constants_mp(a):
    """``b_inf``, ``D``, ``delta`` and ``a_inf`` at 60 digits, straight from the definitions."""
    a = [[mpmath.mpf(float(v)) for v in row] for row in np.asarray(a)]
    K, N = len(a), len(a[0])
    b = [a[n][n] if n < K else a[K - 1][n] for n in range(N)]
    raw = [mpmath.sqrt(mpmath.fsum((a[k][n] / b[n]) ** 2 for n in range(N))) for k in range(K)]
    D, run = [], mpmath.mpf(0)
    for v in raw:
        run = max(run, v)
        D.append(run)
    Kinf = K - 2
    delta = [1 / (mpmath.mpf(2) ** k * D[k + 1]) for k in range(1, Kinf + 1)]
    ainf = [mpmath.sqrt(mpmath.fsum((delta[k] * a[k][n]) ** 2 for k in range(Kinf))) for n in range(N)]
    return b, D, delta, ainf


def box_vertices(N):
    return np.array(list(product((-1.0, 1.0), repeat=N))).T


def brute_grade_norm(t, a, k):
    """``sup || |T| x ||_k`` over ``|x|_{k+1} <= 1`` by enumerating all box vertices.

    The objective is convex, so its maximum over the box sits at a vertex.
    """
    N = t.shape[0]
    V = box_vertices(N) / np.asarray(a[k])[:, None]
    Y = np.abs(t) @ V
    vals = [float(mp_weighted_l2(a[k - 1], Y[:, j])) for j in range(V.shape[1])]
    return max(vals)


def brute_sup_operator_norm(M):
    """Max-norm operator norm of ``M`` as the largest ``|M v|_inf`` over box vertices."""
    V = box_vertices(M.shape[1])
    return float(np.max(np.abs(M @ V)))


def neumann_mp(A, terms=200):
    """``sum_{p < terms} A^p`` in 60-digit arithmetic."""
    A = mpmath.matrix(np.asarray(A, dtype=float).tolist())
    n = A.rows
    S = mpmath.eye(n)
    P = mpmath.eye(n)
    for _ in range(terms):
        P = P * A
        S = S + P
    return np.array(S.tolist(), dtype=float)


def generalized_eig_mp(G1, Ginf):
    """Eigenvalues of the pencil ``Ginf f = lambda G1 f`` at high precision, descending."""
    G1 = mpmath.matrix(np.asarray(G1).tolist())
    Ginf = mpmath.matrix(np.asarray(Ginf).tolist())
    L = mpmath.cholesky(G1)
    Li = mpmath.inverse(L)
    C = Li * Ginf * Li.T
    ev = mpmath.eigsy(C, eigvals_only=True)
    return sorted((float(v) for v in ev), reverse=True)
