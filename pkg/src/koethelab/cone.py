"""Cone-interpolation apparatus for a fixed grade ``r`` and truncation ``N'``.

Everything that involves the sup-norm ``|.|_r`` is computed in the weighted
coordinates ``x~ = a_r * x``, in which ``|x|_r`` is the plain max-norm and
the operator norm on ``G_r`` is the max absolute row sum.  Positive parts and
the cone order are unchanged by this positive diagonal scaling.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._sampling import as_rng, weighted_box
from .basis import BasisExpansion, project_T
from .deadend import DeadEndData, multiplier
from .errors import ContractionError, GradeIndexError, InsufficientGradesError
from .koethe import KoetheMatrix, sup_norm
from .operator import OperatorMatrix
from .reporting import RTOL, Check, SuiteReport, ratio_check

__all__ = [
    "TAU_CONE",
    "NEUMANN_TOL",
    "ConeContext",
    "CEstimate",
    "invert_contraction",
    "build_context",
    "cone_defect",
    "cone_member",
    "cone_samples",
    "decompose",
    "cone_operators",
    "verify_context",
    "verify_decomposition",
    "endpoint_inequalities",
    "estimate_C",
    "equicontinuity_check",
    "hypothesis_checks",
    "C_stability",
]

TAU_CONE = 1e-12
NEUMANN_TOL = 1e-12


def _row_norm(M: np.ndarray) -> float:
    return float(np.abs(M).sum(axis=1).max()) if M.size else 0.0


@dataclass(frozen=True, eq=False)
class ConeContext:
    """``A = J_r |T'| J_r' Q^(N')`` and ``(I - A)^-1`` for one ``(r, N')``.

    ``A_w`` and ``Binv_w`` are the weighted-coordinate forms
    ``diag(a_r) X diag(a_r)^-1``.
    """

    m: KoetheMatrix = field(repr=False)
    dd: DeadEndData = field(repr=False)
    T: OperatorMatrix = field(repr=False)
    r: int
    Nprime: int
    J: np.ndarray = field(repr=False)
    Jp: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    A_w: np.ndarray = field(repr=False)
    Binv_w: np.ndarray = field(repr=False)
    nu: float
    neumann_terms: int
    neumann_gap: float

    @property
    def weights(self) -> np.ndarray:
        return self.m.a[self.r - 1]

    @property
    def Q(self) -> np.ndarray:
        return (np.arange(self.m.N) < self.Nprime).astype(float)

    @property
    def Binv(self) -> np.ndarray:
        w = self.weights
        return self.Binv_w * (w[None, :] / w[:, None])

    @property
    def Binv_norm(self) -> float:
        return _row_norm(self.Binv_w)

    @property
    def B_norm(self) -> float:
        return _row_norm(np.eye(self.m.N) - self.A_w)

    def to_w(self, x):
        x = np.asarray(x, dtype=float)
        return x * (self.weights if x.ndim == 1 else self.weights[:, None])

    def from_w(self, xw):
        xw = np.asarray(xw, dtype=float)
        return xw / (self.weights if xw.ndim == 1 else self.weights[:, None])

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "Nprime": self.Nprime,
            "nu": self.nu,
            "Binv_norm": self.Binv_norm,
            "B_norm": self.B_norm,
            "neumann_terms": self.neumann_terms,
            "neumann_gap": self.neumann_gap,
        }


def invert_contraction(A: np.ndarray) -> tuple[np.ndarray, int, float]:
    """``(I - A)^-1`` for ``||A||_inf = nu < 1`` by direct solve.

    Returns the inverse, the number ``P`` of Neumann terms with
    ``nu^(P+1) / (1 - nu) < NEUMANN_TOL`` and the max-row-sum distance between
    the solve and the partial sum ``sum_{p <= P} A^p``.
    """
    N = A.shape[0]
    nu = _row_norm(A)
    if nu >= 1.0:
        raise ContractionError(f"Neumann series diverges for norm {nu!r}")
    I = np.eye(N)
    inv = np.linalg.solve(I - A, I)
    P = 0
    if nu > 0.0:
        while nu ** (P + 1) / (1.0 - nu) >= NEUMANN_TOL:
            P += 1
    S = I.copy()
    term = I.copy()
    for _ in range(P):
        term = A @ term
        S += term
    return inv, P, _row_norm(inv - S)


def build_context(m: KoetheMatrix, dd: DeadEndData, Tp: OperatorMatrix, r: int, Nprime: int | None = None) -> ConeContext:
    """Assemble the cone operator and invert ``B = I - A``.

    The inverse comes from a direct solve and is cross-checked against the
    Neumann sum ``sum_{p <= P} A^p`` with ``P`` the first index such that
    ``nu^(P+1) / (1 - nu) < NEUMANN_TOL``.
    """
    if not (isinstance(r, (int, np.integer)) and 1 <= r <= dd.K_inf - 1):
        raise GradeIndexError(f"grade r = {r!r} outside 1..{dd.K_inf - 1}")
    N = m.N
    Nprime = N if Nprime is None else int(Nprime)
    if not 1 <= Nprime <= N:
        raise GradeIndexError(f"truncation N' = {Nprime} outside 1..{N}")
    q = (np.arange(N) < Nprime).astype(float)
    J = multiplier(m, r)
    Jp = m.a[0] / m.a[r + 1]
    modT = np.abs(Tp.t)
    A = J[:, None] * modT * (Jp * q)[None, :]
    # a_{r,i} A_ij / a_{r,j} without forming the (possibly huge) weight ratio
    A_w = m.a[r][:, None] * modT * (m.a[0] * q / (m.a[r + 1] * m.a[r - 1]))[None, :]
    nu = _row_norm(A_w)
    if nu > 0.5:
        raise ContractionError(f"cone operator has G_{r} norm {nu!r} > 1/2")
    Binv_w, P, gap = invert_contraction(A_w)
    for arr in (J, Jp, A, A_w, Binv_w):
        arr.setflags(write=False)
    return ConeContext(m, dd, Tp, int(r), Nprime, J, Jp, A, A_w, Binv_w, nu, P, gap)


def verify_context(ctx: ConeContext) -> SuiteReport:
    rep = SuiteReport(f"context_r{ctx.r}_N{ctx.Nprime}")
    rep.add(Check("nu_le_half", ctx.nu, bound=0.5, samples=1))
    rep.add(Check("A_nonnegative", 0.0 if np.all(ctx.A >= 0) else np.inf, samples=ctx.A.size))
    rep.add(Check("Binv_norm_le_2", ctx.Binv_norm, bound=2.0, tol=RTOL, samples=1))
    rep.add(Check("Binv_B_norms_le_4", ctx.Binv_norm * ctx.B_norm, bound=4.0, tol=RTOL, samples=1))
    rep.add(Check("neumann_vs_solve", ctx.neumann_gap, bound=1e-10, samples=1, detail={"terms": ctx.neumann_terms}))
    # exact inverse is I + A + A^2 + ... >= I entrywise
    Bi = ctx.Binv_w
    neg = float(max(0.0, -(Bi - np.eye(ctx.m.N)).min()))
    rep.add(Check("Binv_dominates_identity", neg, bound=RTOL, samples=Bi.size))
    rep.values.update(ctx.to_dict())
    return rep


# -- cone membership ---------------------------------------------------------


def cone_defect(ctx: ConeContext, x) -> np.ndarray | float:
    """How far ``x`` is from ``{x >= 0, x >= A x}``, relative to ``|x|_r``.

    Zero or negative means the inequalities hold exactly.
    """
    xw = ctx.to_w(x)
    scale = np.max(np.abs(xw), axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    worst = np.maximum(np.max(-xw, axis=0), np.max(ctx.A_w @ xw - xw, axis=0))
    out = worst / scale
    return float(out) if np.ndim(out) == 0 else out


def cone_member(ctx: ConeContext, x, tau_cone: float = TAU_CONE):
    """Membership in the cone ``Q_{r,N'}`` with additive slack ``tau_cone |x|_r``."""
    return cone_defect(ctx, x) <= tau_cone


def cone_samples(ctx: ConeContext, count: int, seed=0) -> np.ndarray:
    """Points of the cone: ``B^-1 w`` for ``w >= 0``.

    Column 0 maps the vertex ``w = 1 / a_r`` of the unit box, the next ``N``
    columns the unit vectors, the remaining ``count`` columns random ``w``
    drawn in the weighted box.
    """
    rng = as_rng(seed)
    N = ctx.m.N
    Ww = np.hstack([np.ones((N, 1)), np.eye(N), weighted_box(rng, np.ones(N), count, signed=False)])
    return ctx.from_w(ctx.Binv_w @ Ww)


def decompose(ctx: ConeContext, x) -> tuple[np.ndarray, np.ndarray]:
    """Split ``x = y - z`` with ``y = B^-1 (Bx)_+`` and ``z = B^-1 (Bx)_-``."""
    xw = ctx.to_w(x)
    bx = xw - ctx.A_w @ xw
    y = ctx.Binv_w @ np.maximum(bx, 0.0)
    z = ctx.Binv_w @ np.maximum(-bx, 0.0)
    return ctx.from_w(y), ctx.from_w(z)


def verify_decomposition(ctx: ConeContext, samples: int = 1000, seed=0, tau_cone: float = TAU_CONE) -> SuiteReport:
    rng = as_rng(seed)
    rep = SuiteReport(f"decomposition_r{ctx.r}_N{ctx.Nprime}")
    X = weighted_box(rng, ctx.weights, samples)
    Y, Z = decompose(ctx, X)
    r = ctx.r
    nx = sup_norm(ctx.m, X, r)
    rep.add(ratio_check("identity", sup_norm(ctx.m, X - (Y - Z), r), nx, bound=1e-12))
    rep.add(ratio_check("y_le_4x", sup_norm(ctx.m, Y, r), nx, bound=4.0))
    rep.add(ratio_check("z_le_4x", sup_norm(ctx.m, Z, r), nx, bound=4.0))
    defect = np.maximum(cone_defect(ctx, Y), cone_defect(ctx, Z))
    rep.add(Check("parts_in_cone", float(max(defect.max(), 0.0)), bound=tau_cone, samples=samples))
    return rep


# -- operators S_{n,r}^(N') ----------------------------------------------------


def cone_operators(ctx: ConeContext, e: BasisExpansion) -> list[np.ndarray]:
    """Weighted matrices of ``S_n = T_n J_r' Q^(N')`` for ``n = 1..d``."""
    w = ctx.weights
    right = ctx.Jp * ctx.Q / w
    out = []
    for n in range(1, e.d + 1):
        Tn = project_T(ctx.T, e, n).matrix
        out.append(w[:, None] * Tn * right[None, :])
    return out


def endpoint_inequalities(ctx: ConeContext, e: BasisExpansion, n: int, samples: int = 1000, seed=0) -> SuiteReport:
    """``|S x|_1 <= |x|_1`` on ``x >= 0`` and ``|S x|_inf <= |x|_inf`` on the cone."""
    rng = as_rng(seed)
    m, dd = ctx.m, ctx.dd
    rep = SuiteReport(f"endpoints_r{ctx.r}_N{ctx.Nprime}_n{n}")
    Tn = project_T(ctx.T, e, n)
    right = ctx.Jp * ctx.Q

    def S(X):
        return Tn(right[:, None] * X)

    Xpos = np.hstack([weighted_box(rng, m.a[0], samples, signed=False), np.eye(m.N)])
    rep.add(ratio_check("G1_endpoint", sup_norm(m, S(Xpos), 1), sup_norm(m, Xpos, 1), tol=1e-9))
    C = cone_samples(ctx, samples, rng)
    rep.add(ratio_check("Ginf_endpoint_on_cone", dd.inf_sup(S(C)), dd.inf_sup(C), tol=1e-9))
    return rep


@dataclass(frozen=True)
class CEstimate:
    """Sampled interpolation constant for one ``(r, N')``."""

    value: float
    r: int
    Nprime: int
    samples: int
    seed: int | None
    argmax_n: int
    full_norm: float

    def to_dict(self) -> dict:
        return {
            "C_hat": self.value,
            "r": self.r,
            "Nprime": self.Nprime,
            "samples": self.samples,
            "seed": self.seed,
            "argmax_n": self.argmax_n,
            "max_G_r_norm_of_S": self.full_norm,
        }


def estimate_C(ctx: ConeContext, e: BasisExpansion, samples: int = 200, seed: int | None = 0) -> CEstimate:
    """Largest observed ``|S_n x|_r / |x|_r`` over ``n <= d`` and cone samples.

    ``full_norm`` is the exact ``G_r`` operator norm of the worst ``S_n`` over
    the whole space, an upper bound for the cone supremum.
    """
    Xw = ctx.to_w(cone_samples(ctx, samples, seed))
    denom = np.max(np.abs(Xw), axis=0)
    best, arg, full = 0.0, 0, 0.0
    for n, Sw in enumerate(cone_operators(ctx, e), start=1):
        ratio = float(np.max(np.max(np.abs(Sw @ Xw), axis=0) / denom))
        if ratio > best:
            best, arg = ratio, n
        full = max(full, _row_norm(Sw))
    return CEstimate(best, ctx.r, ctx.Nprime, samples, seed, arg, full)


def equicontinuity_check(m: KoetheMatrix, e: BasisExpansion, T: OperatorMatrix, C_hat: float, r: int, samples: int = 1000, seed=0) -> SuiteReport:
    """The grade-``r`` family bound ``|T_n x|_r <= 8 C(r) |x|_{r+3}`` for all ``n``.

    Besides the sampled ratio this reports the exact operator norm of the
    worst ``T_n`` from ``G_{r+3}`` to ``G_r``.
    """
    if r + 3 > m.K:
        raise InsufficientGradesError(f"equicontinuity at grade {r} needs K >= {r + 3}, got {m.K}")
    rng = as_rng(seed)
    X = np.hstack([weighted_box(rng, m.a[r + 2], samples), np.eye(m.N)])
    top = sup_norm(m, X, r + 3)
    worst, exact, by_n = 0.0, 0.0, []
    for n in range(1, e.d + 1):
        Tn = project_T(T, e, n)
        ratio = float(np.max(sup_norm(m, Tn(X), r) / top))
        by_n.append(ratio)
        worst = max(worst, ratio)
        Mn = Tn.matrix
        exact = max(exact, _row_norm(m.a[r - 1][:, None] * Mn / m.a[r + 2][None, :]))
    bound = 8.0 * C_hat
    rep = SuiteReport(f"equicontinuity_r{r}")
    rep.add(Check("sampled_sup", worst, bound=bound, samples=X.shape[1] * e.d))
    rep.add(Check("exact_operator_norm", exact, bound=bound, samples=e.d))
    rep.values.update(C_hat=C_hat, bound=bound, worst_ratio_by_n=by_n, r=r)
    return rep


def hypothesis_checks(ctx: ConeContext, samples: int = 200, seed=0, tau_cone: float = TAU_CONE) -> SuiteReport:
    """Lower semi-lattice, totality in ``G_inf`` and a strictly positive element."""
    rng = as_rng(seed)
    dd = ctx.dd
    rep = SuiteReport(f"hypotheses_r{ctx.r}_N{ctx.Nprime}")
    # 1. closure under componentwise minimum
    X = cone_samples(ctx, samples, rng)
    Y = cone_samples(ctx, samples, rng)[:, rng.permutation(X.shape[1])]
    rep.add(Check("semilattice", float(max(np.max(cone_defect(ctx, np.minimum(X, Y))), 0.0)), bound=tau_cone, samples=X.shape[1]))
    rep.add(Check("A_monotone", 0.0 if np.all(ctx.A >= 0) else np.inf, samples=ctx.A.size))

    # 2. totality: every x is a difference of cone elements, A bounded on G_inf
    Xs = weighted_box(rng, dd.a_inf, samples)
    Yp, Zp = decompose(ctx, Xs)
    defect = np.maximum(cone_defect(ctx, Yp), cone_defect(ctx, Zp))
    rep.add(Check("total_decomposition", float(max(defect.max(), 0.0)), bound=tau_cone, samples=samples))
    rep.add(ratio_check("total_identity", dd.inf_sup(Xs - (Yp - Zp)), dd.inf_sup(Xs), bound=1e-12))
    ainf = dd.a_inf
    C_N = _row_norm(ainf[:, None] * ctx.A / ainf[None, :])
    AX = ctx.A @ Xs
    rep.add(ratio_check("A_bounded_on_Ginf", dd.inf_sup(AX), C_N * dd.inf_sup(Xs), tol=RTOL))
    rep.add(ratio_check("A_sup_le_hilbert", dd.inf_sup(AX), dd.inf_hilbert(AX), tol=RTOL))
    JQX = (ctx.Jp * ctx.Q)[:, None] * Xs
    rep.add(ratio_check("A_hilbert_le_M_r", dd.inf_hilbert(AX), dd.M[ctx.r - 1] * dd.inf_zero(JQX), tol=RTOL))
    rep.values["C_Nprime"] = C_N

    # 3. strictly positive element x = B^-1 x0 >= x0
    x0 = np.full(ctx.m.N, float(np.min(1.0 / ainf)))
    x = ctx.from_w(ctx.Binv_w @ ctx.to_w(x0))
    rep.add(Check("positive_element_ge_x0", float(np.max(x0 / x)), tol=RTOL, samples=ctx.m.N))
    rep.add(Check("positive_element_in_cone", max(cone_defect(ctx, x), 0.0), bound=tau_cone, samples=1))
    return rep


def C_stability(m: KoetheMatrix, dd: DeadEndData, Tp: OperatorMatrix, e: BasisExpansion, r: int,
                truncations, seeds, samples: int = 200) -> dict:
    """``C_hat(r)`` over a grid of truncations and seeds, with its relative spread."""
    table = []
    for Np in truncations:
        ctx = build_context(m, dd, Tp, r, Np)
        for s in seeds:
            est = estimate_C(ctx, e, samples, s)
            table.append({"Nprime": int(Np), "seed": s, "C_hat": est.value})
    vals = np.array([row["C_hat"] for row in table])
    top = float(vals.max()) if vals.size else 0.0
    spread = float((vals.max() - vals.min()) / top) if top > 0 else 0.0
    return {"r": r, "table": table, "spread": spread}
