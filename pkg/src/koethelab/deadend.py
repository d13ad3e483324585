"""The three dead-end spaces and the inequality chain built on them.

With ``K`` grades only ``K_inf = K - 2`` grades enter the weight ``a_inf``,
so that every ``delta_k = 1 / (2^k D_{k+2})`` refers to an existing
constant.  ``b_inf[n] = a[n, n]`` for ``n <= K`` and ``a[K, n]`` beyond.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._sampling import as_rng, weighted_box
from .errors import GradeIndexError, InsufficientGradesError
from .koethe import KoetheMatrix, hilbert_norm, sup_norm, weighted_l2
from .operator import OperatorMatrix, modulus
from .reporting import RTOL, Check, SuiteReport, ratio_check

__all__ = [
    "DeadEndData",
    "diagonal_weight",
    "compute_D",
    "build_deadend",
    "multiplier",
    "multiplier_bound",
    "verify_diagonal_map",
    "verify_inclusions",
    "verify_multipliers",
    "valid_cone_grades",
]


def diagonal_weight(m: KoetheMatrix) -> np.ndarray:
    """``b_inf``: the diagonal ``a_{n,n}``, continued along the top grade."""
    K, N = m.K, m.N
    b = m.a[K - 1].copy()
    n = min(K, N)
    b[:n] = m.a[np.arange(n), np.arange(n)]
    return b


def compute_D(m: KoetheMatrix) -> np.ndarray:
    """Nondecreasing constants with ``||x||_k <= D_k |x|_{inf,0}``.

    The raw constant of grade ``k`` is the l2 norm of the column ratios
    ``a_{k,n} / b_inf[n]``; a running maximum makes the sequence monotone.
    """
    b = diagonal_weight(m)
    raw = weighted_l2(1.0 / b, m.a.T)
    return np.maximum.accumulate(np.atleast_1d(raw))


@dataclass(frozen=True, eq=False)
class DeadEndData:
    m: KoetheMatrix = field(repr=False)
    D: np.ndarray
    delta: np.ndarray
    a_inf: np.ndarray
    b_inf: np.ndarray
    M: np.ndarray

    @property
    def K_inf(self) -> int:
        return self.delta.shape[0]

    def inf_hilbert(self, x):
        """``||x||_inf``, evaluated through the weight ``a_inf``."""
        return weighted_l2(self.a_inf, x)

    def inf_hilbert_by_grades(self, x):
        """``||x||_inf`` evaluated as ``(sum_k delta_k^2 ||x||_k^2)^(1/2)``."""
        x = np.asarray(x, dtype=float)
        grades = np.array([hilbert_norm(self.m, x, k) for k in range(1, self.K_inf + 1)])
        return weighted_l2(self.delta, grades)

    def inf_sup(self, x):
        """``|x|_inf = sup_n |x_n| a_inf[n]``."""
        x = np.asarray(x, dtype=float)
        w = self.a_inf if x.ndim == 1 else self.a_inf[:, None]
        out = np.max(np.abs(x) * w, axis=0)
        return float(out) if x.ndim == 1 else out

    def inf_zero(self, x):
        """``|x|_{inf,0} = sup_n |x_n| b_inf[n]``."""
        x = np.asarray(x, dtype=float)
        w = self.b_inf if x.ndim == 1 else self.b_inf[:, None]
        out = np.max(np.abs(x) * w, axis=0)
        return float(out) if x.ndim == 1 else out

    def to_dict(self) -> dict:
        return {
            "K_inf_used": self.K_inf,
            "D": self.D.tolist(),
            "delta": self.delta.tolist(),
            "a_inf": self.a_inf.tolist(),
            "b_inf": self.b_inf.tolist(),
            "M": self.M.tolist(),
        }


def build_deadend(m: KoetheMatrix, D: np.ndarray | None = None) -> DeadEndData:
    if m.K < 3:
        raise InsufficientGradesError(f"dead-end construction needs K >= 3, got K = {m.K}")
    if D is None:
        D = compute_D(m)
    D = np.asarray(D, dtype=float)
    K_inf = m.K - 2
    k = np.arange(1, K_inf + 1)
    delta = 1.0 / (2.0**k * D[k + 1])
    a_inf = weighted_l2(delta, m.a[:K_inf])
    M = np.sqrt(D[k + 1] ** 2 + 1.0)
    arrays = [np.array(v, dtype=float) for v in (D, delta, a_inf, diagonal_weight(m), M)]
    for arr in arrays:
        arr.setflags(write=False)
    return DeadEndData(m, *arrays)


def valid_cone_grades(dd: DeadEndData) -> list[int]:
    """Grades ``r`` with ``1 <= r <= K_inf - 1``."""
    return list(range(1, dd.K_inf))


def _check_r(dd: DeadEndData, r: int) -> None:
    if not (isinstance(r, (int, np.integer)) and 1 <= r <= dd.K_inf - 1):
        raise GradeIndexError(f"grade r = {r!r} outside 1..{dd.K_inf - 1}")


def multiplier(m: KoetheMatrix, r: int) -> np.ndarray:
    """Diagonal of ``J_r``: ``a_{r+1,n} / a_{r,n}``."""
    return m.a[r] / m.a[r - 1]


def multiplier_bound(dd: DeadEndData, r: int, x) -> dict[str, np.ndarray]:
    """Left and right sides of the two multiplier estimates at ``x``.

    ``"inf_le_multiplied_sup"``: ``||x||_inf <= |J_r x|_inf``.
    ``"J_r"``: ``||J_r x||_inf <= (D_{r+1}^2 + 1)^(1/2) |x|_{inf,0}``.
    """
    _check_r(dd, r)
    x = np.asarray(x, dtype=float)
    J = multiplier(dd.m, r)
    Jx = J * x if x.ndim == 1 else J[:, None] * x
    return {
        "inf_le_multiplied_sup": (dd.inf_hilbert(x), dd.inf_sup(Jx)),
        "J_r": (dd.inf_hilbert(Jx), math.sqrt(dd.D[r] ** 2 + 1.0) * dd.inf_zero(x)),
    }


def verify_diagonal_map(Tp: OperatorMatrix, dd: DeadEndData, samples: int = 1000, seed=0) -> SuiteReport:
    """Check ``||T'x||_inf <= |x|_{inf,0}`` and the constant chain behind it."""
    rng = as_rng(seed)
    rep = SuiteReport("diagonal_map")
    k = np.arange(1, dd.K_inf + 1)
    chain = math.fsum((dd.delta * dd.D[k]) ** 2)
    rep.values["delta_D_chain"] = chain
    rep.add(Check("delta_D_chain", chain, samples=1))
    extreme = 1.0 / dd.b_inf
    rep.add(ratio_check("extreme_point", dd.inf_hilbert(Tp.t @ extreme), dd.inf_zero(extreme)))
    X = np.hstack([weighted_box(rng, dd.b_inf, samples // 2), weighted_box(rng, dd.b_inf, samples - samples // 2, signed=False)])
    rep.add(ratio_check("random_samples", dd.inf_hilbert(Tp.t @ X), dd.inf_zero(X)))
    return rep


def verify_inclusions(m: KoetheMatrix, dd: DeadEndData, samples: int = 1000, seed=0) -> SuiteReport:
    """Tail sums behind ``G_{inf,0} c H_k`` and the norm comparisons they imply."""
    rng = as_rng(seed)
    rep = SuiteReport("inclusions")
    b = dd.b_inf
    tails = [math.fsum((m.a[k - 1, k:] / b[k:]) ** 2) for k in range(1, m.K)]
    rep.values["tail_sums"] = tails
    if tails:
        i = int(np.argmax(tails))
        rep.add(Check("tail_sums", tails[i], samples=len(tails), witness=i + 1))
    X = weighted_box(rng, b, samples)
    for k in range(1, m.K + 1):
        rep.add(ratio_check(f"sup_le_hilbert_k{k}", sup_norm(m, X, k), hilbert_norm(m, X, k), tol=RTOL))
        rep.add(ratio_check(f"hilbert_le_D_k{k}", hilbert_norm(m, X, k), dd.D[k - 1] * dd.inf_zero(X), tol=RTOL))
    return rep


def verify_multipliers(Tp: OperatorMatrix, dd: DeadEndData, r: int, samples: int = 1000, seed=0) -> SuiteReport:
    """Multiplier estimates for grade ``r`` on nonnegative samples and extreme points.

    Besides the two estimates of :func:`multiplier_bound` this checks
    ``||J_r |T'| x||_inf <= M_r |x|_{inf,0}`` and the auxiliary step
    ``||J_r x||_k <= ||x||_{k+1}`` for ``r < k < K``.
    """
    _check_r(dd, r)
    rng = as_rng(seed)
    m = dd.m
    N = m.N
    X = np.hstack([
        weighted_box(rng, dd.b_inf, samples, signed=False),
        (1.0 / dd.b_inf)[:, None],
        np.diag(1.0 / dd.b_inf),
    ])
    rep = SuiteReport(f"multipliers_r{r}")
    bounds = multiplier_bound(dd, r, X)
    rep.add(ratio_check("inf_le_multiplied_sup", *bounds["inf_le_multiplied_sup"], tol=RTOL))
    rep.add(ratio_check("J_r_bound", *bounds["J_r"], tol=RTOL))
    J = multiplier(m, r)
    JTX = J[:, None] * (modulus(Tp).t @ X)
    rep.add(ratio_check("modulus_bound", dd.inf_hilbert(JTX), dd.M[r - 1] * dd.inf_zero(X), tol=RTOL))
    JX = J[:, None] * X
    for k in range(r + 1, m.K):
        rep.add(ratio_check(f"aux_k{k}", hilbert_norm(m, JX, k), hilbert_norm(m, X, k + 1), tol=RTOL))
    rep.values["M_r"] = float(dd.M[r - 1])
    rep.values["samples"] = samples + 1 + N
    return rep
