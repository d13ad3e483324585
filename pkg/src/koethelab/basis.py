"""Basis of the range of ``T`` from simultaneous diagonalization of two Gram forms.

On a truncation the range ``F = T(E)`` carries the two inner products

    <x, y>_1   = sum_n a_{1,n}^2   x_n y_n
    <x, y>_inf = sum_n a_inf[n]^2  x_n y_n

and the embedding of ``(F, <.,.>_inf)`` into ``(F, <.,.>_1)`` has a Schmidt
system ``f_j``: orthonormal for the first form, orthogonal for the second,
with ``lambda_j = ||f_j||_inf^2``.  It is the solution of the definite
generalized eigenproblem ``G_inf v = lambda G_1 v`` on any basis of ``F``.
"""
from __future__ import annotations

import math

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._sampling import as_rng, weighted_box
from .deadend import DeadEndData
from .errors import EmptyRangeError, GradeIndexError, IllConditionedSpanError
from .koethe import KoetheMatrix, weighted_l2
from .operator import OperatorMatrix, modulus
from .reporting import RTOL, Check, SuiteReport, ratio_check

__all__ = [
    "TAU_RANK",
    "TAU_ORTH",
    "LossyReconstructionWarning",
    "RangeSubspace",
    "BasisExpansion",
    "ProjectedOperator",
    "simultaneous_jacobi",
    "range_basis",
    "extract_basis",
    "expand",
    "reconstruct",
    "project_T",
    "verify_expansion",
    "verify_contractions",
    "approximation_errors",
    "agreement_tolerance",
]

TAU_RANK = 1e-10
TAU_ORTH = 1e-9
# Eigenvalues closer than this (relative to the largest) count as tied.
TIE_RTOL = 64 * np.finfo(float).eps


class LossyReconstructionWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class RangeSubspace:
    """Columns of ``B`` span ``range(T)`` and are orthonormal in ``H_1``."""

    B: np.ndarray
    m: KoetheMatrix = field(repr=False)
    source: OperatorMatrix | None = field(default=None, repr=False)
    pivots: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class BasisExpansion:
    """Vectors ``f[:, j]`` with weights ``lam[j] = ||f_j||_inf^2``, sorted descending."""

    f: np.ndarray
    lam: np.ndarray
    w1: np.ndarray = field(repr=False)
    winf: np.ndarray = field(repr=False)
    multiplicities: tuple[int, ...] = ()
    sweeps: int = 0

    @property
    def d(self) -> int:
        return self.f.shape[1]

    def gram1(self) -> np.ndarray:
        Y = self.w1[:, None] * self.f
        return Y.T @ Y

    def gram_inf(self) -> np.ndarray:
        Y = self.winf[:, None] * self.f
        return Y.T @ Y

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "lambda": self.lam.tolist(),
            "multiplicities": list(self.multiplicities),
            "vectors": [
                {"j": j + 1, "lambda": float(self.lam[j]), "entries": (self.f[:, j] + 0.0).tolist()}
                for j in range(self.d)
            ],
        }


def simultaneous_jacobi(
    B: np.ndarray, w1: np.ndarray, winf: np.ndarray, max_sweeps: int = 60
) -> tuple[np.ndarray, int]:
    """Rotate the columns of ``B`` until they are orthogonal in both forms.

    ``B`` must be orthonormal for the ``w1`` form.  This is the one-sided
    (Hestenes) form of cyclic Jacobi on the reduced matrix ``B^T W^2 B``:
    the plane rotations act on the vectors themselves, so orthogonality in
    the ``winf`` form is reached relative to the column norms, which keeps
    small Schmidt weights accurate next to large ones.  Pairs are visited in
    row order; a sweep without rotations ends the iteration.
    """
    F = np.array(B, dtype=float)
    d = F.shape[1]
    wsq = winf**2
    tol = max(d, 1) * np.finfo(float).eps
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                fp, fq = F[:, p], F[:, q]
                gpp = np.dot(wsq * fp, fp)
                gqq = np.dot(wsq * fq, fq)
                gpq = np.dot(wsq * fp, fq)
                if abs(gpq) <= tol * np.sqrt(gpp * gqq):
                    continue
                rotated = True
                zeta = (gqq - gpp) / (2.0 * gpq)
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(zeta * zeta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                F[:, p], F[:, q] = c * fp - s * fq, s * fp + c * fq
        if not rotated:
            return F, sweep - 1
    return F, max_sweeps


def range_basis(T: OperatorMatrix, tau_rank: float = TAU_RANK) -> RangeSubspace:
    """``H_1``-orthonormal basis of ``range(T)`` from pivoted QR.

    The numerical rank counts pivots ``|R_ii| > tau_rank * |R_11|``.
    """
    w1 = T.m.a[0]
    Q, R, piv = linalg.qr(w1[:, None] * T.t, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        raise EmptyRangeError("T = 0 has empty range")
    d = int(np.count_nonzero(diag > tau_rank * diag[0]))
    return RangeSubspace(Q[:, :d] / w1[:, None], T.m, T, piv[:d])


def _cluster_sizes(lam: np.ndarray) -> tuple[int, ...]:
    if lam.size == 0:
        return ()
    scale = abs(lam[0])
    sizes = [1]
    for prev, cur in zip(lam[:-1], lam[1:]):
        if prev - cur <= TIE_RTOL * scale:
            sizes[-1] += 1
        else:
            sizes.append(1)
    return tuple(sizes)


def extract_basis(sub: RangeSubspace, dd: DeadEndData, tau_rank: float = TAU_RANK) -> BasisExpansion:
    """Solve ``G_inf v = lambda G_1 v`` on the span of ``sub``.

    ``G_1 = L L^T`` turns the span into the ``H_1``-orthonormal basis
    ``B L^-T``; :func:`simultaneous_jacobi` then diagonalizes ``G_inf`` on it.
    Each ``f_j`` is rescaled to unit ``H_1`` norm and given a positive
    largest-magnitude entry.
    """
    if sub.d < 1:
        raise EmptyRangeError("range subspace has dimension 0")
    w1, winf = sub.m.a[0], dd.a_inf
    Y1 = w1[:, None] * sub.B
    G1 = Y1.T @ Y1
    cond = np.linalg.cond(G1)
    if not np.isfinite(cond) or cond > 1.0 / tau_rank:
        raise IllConditionedSpanError(f"H_1 Gram matrix has condition number {cond:.3g}")
    L = linalg.cholesky(G1, lower=True)
    B = linalg.solve_triangular(L, sub.B.T, lower=True).T
    F, sweeps = simultaneous_jacobi(B, w1, winf)
    F = F / weighted_l2(w1, F)[None, :]
    lead = np.argmax(np.abs(F), axis=0)
    F = F * np.sign(F[lead, np.arange(F.shape[1])])[None, :]
    lam = weighted_l2(winf, F) ** 2
    order = np.argsort(-lam, kind="stable")
    F, lam = F[:, order], lam[order]
    for arr in (F, lam):
        arr.setflags(write=False)
    return BasisExpansion(F, lam, w1, winf, _cluster_sizes(lam), sweeps)


def expand(x, e: BasisExpansion, tau_rank: float = TAU_RANK) -> np.ndarray:
    """Coefficients ``<x, f_j>_1``; warns when ``x`` is not in the span."""
    x = np.asarray(x, dtype=float)
    w = e.w1 if x.ndim == 1 else e.w1[:, None]
    coef = e.f.T @ (w**2 * x)
    resid = weighted_l2(e.w1, x - e.f @ coef)
    size = weighted_l2(e.w1, x)
    rel = np.where(size > 0, resid / np.where(size > 0, size, 1.0), 0.0)
    if np.any(rel > tau_rank):
        warnings.warn(
            f"vector outside the span, relative residual {float(np.max(rel)):.3g}",
            LossyReconstructionWarning,
            stacklevel=2,
        )
    return coef


def reconstruct(coef, e: BasisExpansion) -> np.ndarray:
    return e.f @ np.asarray(coef, dtype=float)


@dataclass(frozen=True, eq=False)
class ProjectedOperator:
    """``T_n x = sum_{j <= n} <Tx, f_j>_1 f_j``.

    On the range of ``T`` this equals ``Tx - sum_{j > n} <Tx, f_j>_1 f_j``,
    which is the form evaluated: the head sum would carry the rounding of the
    large-``lambda`` coefficients into the ``H_inf`` norm, the tail only that
    of the small ones.  ``T_0 = 0`` and ``T_d = T``.
    """

    T: OperatorMatrix = field(repr=False)
    e: BasisExpansion = field(repr=False)
    n: int

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.T.t @ x
        if self.n == 0:
            return np.zeros_like(y)
        if self.n == self.e.d:
            return y
        Ft = self.e.f[:, self.n :]
        w = self.e.w1 if y.ndim == 1 else self.e.w1[:, None]
        return y - Ft @ (Ft.T @ (w**2 * y))

    @property
    def matrix(self) -> np.ndarray:
        return self(np.eye(self.T.N))


def project_T(T: OperatorMatrix, e: BasisExpansion, n: int) -> ProjectedOperator:
    if not (isinstance(n, (int, np.integer)) and 0 <= n <= e.d):
        raise GradeIndexError(f"truncation level n = {n!r} outside 0..{e.d}")
    return ProjectedOperator(T, e, int(n))


def agreement_tolerance(e: BasisExpansion) -> float:
    """``64 eps (lambda_1 / lambda_d)^(1/2)``, relative to ``||Tx||_inf``.

    Coefficients carry absolute rounding of order ``eps ||Tx||_1``; measured in
    ``H_inf`` that is amplified by at most the square root of the eigenvalue
    spread.
    """
    kappa = math.sqrt(e.lam[0] / e.lam[-1]) if e.d else 1.0
    return 64.0 * np.finfo(float).eps * kappa


def approximation_errors(T: OperatorMatrix, e: BasisExpansion, x) -> np.ndarray:
    """``||Tx - T_n x||_inf`` for ``n = 0..d`` from the coefficients.

    With ``H_inf``-orthogonal ``f_j`` the error is ``(sum_{j > n} c_j^2
    lambda_j)^(1/2)``.  The suffix sums are accumulated one term at a time,
    so the computed sequence is nonincreasing and ends at exactly 0.
    Returns shape ``(d + 1,)`` or ``(d + 1, S)``.
    """
    y = T.t @ np.asarray(x, dtype=float)
    w = e.w1 if y.ndim == 1 else e.w1[:, None]
    c = e.f.T @ (w**2 * y)
    lam = e.lam if y.ndim == 1 else e.lam[:, None]
    terms = (c * c) * lam
    zero = np.zeros_like(terms[:1])
    suffix = np.cumsum(np.concatenate([zero, terms[::-1]]), axis=0)[::-1]
    return np.sqrt(suffix)


def _range_residuals(T: OperatorMatrix, F: np.ndarray) -> np.ndarray:
    w1 = T.m.a[0]
    A = w1[:, None] * T.t
    Y = w1[:, None] * F
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    return np.linalg.norm(A @ coef - Y, axis=0) / np.linalg.norm(Y, axis=0)


def _generalized_eigenvalues(T: OperatorMatrix, e: BasisExpansion) -> np.ndarray:
    """Descending eigenvalues of the Gram pair on ``range(T)`` from LAPACK."""
    sub = range_basis(T)
    Y1 = e.w1[:, None] * sub.B
    Yi = e.winf[:, None] * sub.B
    mu = linalg.eigh(Yi.T @ Yi, Y1.T @ Y1, eigvals_only=True)
    return mu[::-1]


def verify_expansion(
    T: OperatorMatrix,
    e: BasisExpansion,
    samples: int = 1000,
    seed=0,
    tau_orth: float = TAU_ORTH,
    tau_rank: float = TAU_RANK,
) -> SuiteReport:
    """Orthogonality, range membership and reconstruction of the extracted basis."""
    rng = as_rng(seed)
    rep = SuiteReport("basis")
    G1 = e.gram1()
    Ginf = e.gram_inf()
    off = Ginf - np.diag(np.diag(Ginf))
    rep.add(Check("gram1_identity", float(np.max(np.abs(G1 - np.eye(e.d)))), bound=tau_orth, samples=1))
    rep.add(Check("gram_inf_offdiag_mass", float(np.linalg.norm(off) / np.linalg.norm(Ginf)), bound=tau_orth, samples=1))
    rel_off = np.abs(off) / np.sqrt(np.outer(e.lam, e.lam))
    rep.add(Check("gram_inf_offdiag_relative", float(np.max(rel_off)), bound=tau_orth, samples=e.d * e.d))
    mu = _generalized_eigenvalues(T, e)
    rep.add(Check("lambda_vs_eigh", float(np.max(np.abs(e.lam - mu)) / e.lam[0]), bound=tau_orth, samples=e.d))
    descending = bool(np.all(np.diff(e.lam) <= 0)) and bool(e.lam[-1] > 0)
    rep.add(Check("lambda_descending_positive", 0.0 if descending else np.inf, samples=e.d))
    res = _range_residuals(T, e.f)
    rep.add(Check("f_in_range", float(np.max(res)), bound=tau_rank, samples=e.d, witness=int(np.argmax(res)) + 1))

    X = np.hstack([weighted_box(rng, np.ones(T.N), samples // 2), weighted_box(rng, T.m.a[-1], samples - samples // 2)])
    Y = T.t @ X
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LossyReconstructionWarning)
        rec = reconstruct(expand(Y, e), e)
    rep.add(ratio_check("reconstruction_h1", weighted_l2(e.w1, Y - rec), weighted_l2(e.w1, Y), bound=tau_orth))
    rep.values.update(d=e.d, multiplicities=list(e.multiplicities), jacobi_sweeps=e.sweeps)
    return rep


def verify_contractions(T: OperatorMatrix, e: BasisExpansion, samples: int = 1000, seed=0) -> SuiteReport:
    """Contractivity of ``T_n`` in ``H_1`` and ``H_inf`` and monotone approximation.

    Comparisons between quantities that coincide in exact arithmetic carry a
    relative headroom of ``RTOL``.  The approximation error is taken from
    :func:`approximation_errors` and cross-checked against the norms of the
    error vectors ``Tx - T_n x``.
    """
    rng = as_rng(seed)
    rep = SuiteReport("contractions")
    X = np.hstack([weighted_box(rng, np.ones(T.N), samples // 2), weighted_box(rng, T.m.a[-1], samples - samples // 2)])
    Xpos = np.abs(X)
    Y = T.t @ X
    Ypos_mod = modulus(T).t @ Xpos
    h1_Y = weighted_l2(e.w1, Y)
    hinf_Y = weighted_l2(e.winf, Y)
    h1_mod = weighted_l2(e.w1, Ypos_mod)

    worst1, worstinf, worstmod, direct = [], [], [], []
    for n in range(e.d + 1):
        Tn = project_T(T, e, n)
        Z = Tn(X)
        c1 = ratio_check("h1", weighted_l2(e.w1, Z), h1_Y)
        cinf = ratio_check("hinf", weighted_l2(e.winf, Z), hinf_Y)
        cmod = ratio_check("mod", weighted_l2(e.w1, Tn(Xpos)), h1_mod)
        worst1.append(c1.worst_ratio)
        worstinf.append(cinf.worst_ratio)
        worstmod.append(cmod.worst_ratio)
        direct.append(weighted_l2(e.winf, Y - Z))
    direct = np.array(direct)
    errs = approximation_errors(T, e, X)
    rep.add(Check("h1_contraction", max(worst1), tol=RTOL, samples=samples * (e.d + 1), witness=int(np.argmax(worst1))))
    rep.add(Check("hinf_contraction", max(worstinf), tol=RTOL, samples=samples * (e.d + 1), witness=int(np.argmax(worstinf))))
    rep.add(Check("modulus_bound_h1", max(worstmod), tol=RTOL, samples=samples * (e.d + 1), witness=int(np.argmax(worstmod))))
    scale = np.where(hinf_Y > 0, hinf_Y, 1.0)
    increase = np.max((errs[1:] - errs[:-1]) / scale[None, :]) if e.d > 0 else 0.0
    rep.add(Check("approx_error_nonincreasing", max(float(increase), 0.0), bound=0.0, samples=samples * e.d))
    rep.add(Check("approx_error_zero_at_d", float(np.max(errs[-1])), bound=0.0, samples=samples))
    # the coefficient form must agree with the error vectors themselves, up to
    # rounding amplified by the spread of the Schmidt weights
    agree = float(np.max(np.abs(direct - errs) / scale[None, :]))
    rep.add(Check("approx_error_direct_agreement", agree, bound=agreement_tolerance(e), samples=samples * (e.d + 1)))
    rep.values["worst_h1_ratio_by_n"] = worst1
    rep.values["worst_hinf_ratio_by_n"] = worstinf
    rep.values["max_rel_approx_error_by_n"] = np.max(errs / scale[None, :], axis=1).tolist()
    return rep
