"""Operators on a truncated Köthe space given by their matrices."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, DegenerateOperatorError, DimensionError
from ._sampling import as_rng, weighted_box
from .koethe import KoetheMatrix, check_grade, hilbert_norm, sup_norm, weighted_l2
from .reporting import RTOL, SuiteReport, ratio_check

__all__ = [
    "OperatorMatrix",
    "apply",
    "modulus",
    "grade_norm",
    "grade_norms",
    "rescale_to_contraction",
    "row_sum_bound",
    "verify_half_contraction",
    "operator_from_config",
]


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """The matrix ``t[i, j]`` of ``T`` acting on the space of ``m``.

    ``scale_applied`` is the factor already multiplied into ``t`` by
    :func:`rescale_to_contraction` (1 for an unscaled operator).
    """

    t: np.ndarray
    m: KoetheMatrix = field(repr=False)
    scale_applied: float = 1.0

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        if t.shape != (self.m.N, self.m.N):
            raise DimensionError(f"operator shape {t.shape} does not match N={self.m.N}")
        if not np.all(np.isfinite(t)):
            raise ValueError("operator has nonfinite entries")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def N(self) -> int:
        return self.t.shape[0]

    def __matmul__(self, x):
        return apply(self, x)


def apply(T: OperatorMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != T.N:
        raise DimensionError(f"vector of length {x.shape[0]} for operator of size {T.N}")
    return T.t @ x


def modulus(T: OperatorMatrix) -> OperatorMatrix:
    """``|T|``, the operator with entries ``|t_ij|``."""
    return replace(T, t=np.abs(T.t))


def grade_norm(T: OperatorMatrix, k: int) -> float:
    """Norm of ``|T|`` from the sup-norm space of grade ``k+1`` into ``H_k``.

    For a nonnegative matrix the supremum of ``|| |T| x ||_k`` over
    ``|x|_{k+1} <= 1`` is attained at ``x_j = 1 / a_{k+1,j}``.
    """
    check_grade(T.m, k, top=T.m.K - 1)
    extreme = 1.0 / T.m.a[k]
    return weighted_l2(T.m.a[k - 1], np.abs(T.t) @ extreme)


def grade_norms(T: OperatorMatrix) -> np.ndarray:
    return np.array([grade_norm(T, k) for k in range(1, T.m.K)])


def rescale_to_contraction(T: OperatorMatrix) -> tuple[OperatorMatrix, float]:
    """Scale ``T`` so that ``|| |T| x ||_k <= |x|_{k+1} / 2`` for every ``k < K``.

    Returns ``(T', c)`` with ``T' = c T`` and ``c <= 1``.  If rounding makes
    the worst computed grade norm land above 1/2, ``c`` is lowered ulp by ulp.
    """
    if not np.any(T.t):
        raise DegenerateOperatorError("T = 0 has trivial range")
    base = T.t
    norms = grade_norms(T)
    worst = float(norms.max()) if norms.size else 0.0
    c = 1.0 if worst <= 0.5 else min(1.0, 1.0 / (2.0 * worst))
    scaled = OperatorMatrix(c * base, T.m, T.scale_applied * c)
    while scaled.m.K > 1 and grade_norms(scaled).max() > 0.5:
        c = float(np.nextafter(c, 0.0))
        scaled = OperatorMatrix(c * base, T.m, T.scale_applied * c)
    if c == 1.0:
        scaled = T
    return scaled, c


def row_sum_bound(T: OperatorMatrix) -> float:
    """``sup_i sum_j |t_ij|``; finite matrices always give a bounded map on c0."""
    return float(np.abs(T.t).sum(axis=1).max())


def verify_half_contraction(Tp: OperatorMatrix, samples: int = 1000, seed=0) -> SuiteReport:
    """Sampled ``|| |T'| x ||_k <= |x|_{k+1} / 2`` for every ``k < K``, plus exact norms."""
    rng = as_rng(seed)
    m = Tp.m
    rep = SuiteReport("half_contraction")
    norms = grade_norms(Tp)
    rep.values["grade_norms"] = norms.tolist()
    rep.values["scale"] = Tp.scale_applied
    rep.values["row_sum_bound"] = row_sum_bound(Tp)
    mod = np.abs(Tp.t)
    for k in range(1, m.K):
        X = weighted_box(rng, m.a[k], samples)
        rep.add(ratio_check(f"sampled_k{k}", hilbert_norm(m, mod @ X, k), 0.5 * sup_norm(m, X, k + 1), tol=RTOL))
        rep.add(ratio_check(f"exact_k{k}", norms[k - 1], 0.5))
    return rep


def operator_from_config(cfg: Mapping[str, Any], m: KoetheMatrix, seed: int | None = None) -> OperatorMatrix:
    """Build an operator from one of::

        {"grid": [...row-major decimals, N*N entries...]}
        {"family": "coordinate-projection", "coords": [1-based indices]}
        {"family": "random-nonneg", "density": d, "seed": s}

    ``seed`` is the fallback when a random config carries none.
    """
    if not isinstance(cfg, Mapping):
        raise ConfigError("operator config must be a mapping")
    N = m.N
    if "grid" in cfg:
        try:
            values = [float(str(v).strip()) for v in cfg["grid"]]
        except ValueError as exc:
            raise ConfigError(f"bad operator grid entry: {exc}") from exc
        if len(values) != N * N:
            raise ConfigError(f"operator grid has {len(values)} entries, expected {N * N}")
        return OperatorMatrix(np.array(values).reshape(N, N), m)
    family = cfg.get("family")
    if family == "coordinate-projection":
        coords = list(cfg.get("coords", []))
        if any(not 1 <= int(c) <= N for c in coords):
            raise ConfigError(f"coordinate outside 1..{N} in {coords}")
        t = np.zeros((N, N))
        for c in coords:
            t[int(c) - 1, int(c) - 1] = 1.0
        return OperatorMatrix(t, m)
    if family == "random-nonneg":
        density = float(cfg.get("density", 0.5))
        if not 0.0 < density <= 1.0:
            raise ConfigError(f"density must lie in (0, 1], got {density}")
        s = cfg.get("seed", seed)
        if s is None:
            raise ConfigError("random operator needs a seed")
        rng = np.random.default_rng(int(s))
        mask = rng.random((N, N)) < density
        t = np.where(mask, rng.random((N, N)), 0.0)
        return OperatorMatrix(t, m)
    raise ConfigError(f"unknown operator family {family!r}")
