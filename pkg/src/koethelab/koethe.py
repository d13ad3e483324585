"""Truncated Köthe matrices, the normalization conditions and the grade norms.

A Köthe matrix is stored as a ``(K, N)`` array ``a`` with ``a[k - 1, n - 1]``
holding the weight of coordinate ``n`` in grade ``k``.  Grade and coordinate
indices in the public API are 1-based, matching the usual notation; arrays
are 0-based internally.

Vectors are 1-d arrays of length ``N``.  The norm functions also accept a
2-d array of shape ``(N, S)`` and then evaluate the norm of every column.
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from .errors import (
    ConfigError,
    DimensionError,
    GradeIndexError,
    InsufficientGradesError,
    InvalidMatrixError,
    NotRegularError,
)

__all__ = [
    "KoetheMatrix",
    "ConditionResult",
    "ConditionReport",
    "NormalizationLog",
    "verify_conditions",
    "normalize",
    "sup_norm",
    "hilbert_norm",
    "weighted_l2",
    "koethe_from_config",
    "demo_matrix",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class KoetheMatrix:
    """Weight grid ``a[k, n]`` of a truncated Köthe space.

    ``normalized`` is only ever set by :func:`verify_conditions`.
    """

    a: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidMatrixError(f"weight grid must be a nonempty 2-d array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidMatrixError("weight grid has nonfinite entries")
        if not np.all(a > 0):
            k, n = np.argwhere(~(a > 0))[0]
            raise InvalidMatrixError(f"nonpositive weight a[{k + 1},{n + 1}] = {a[k, n]!r}")
        with np.errstate(over="ignore"):
            if not np.all(np.isfinite(a * a)):
                raise InvalidMatrixError(
                    f"squared weights overflow (largest entry {a.max()!r})"
                )
        object.__setattr__(self, "a", _frozen(a))

    @property
    def K(self) -> int:
        return self.a.shape[0]

    @property
    def N(self) -> int:
        return self.a.shape[1]

    def row(self, k: int) -> np.ndarray:
        """Weights of grade ``k`` (1-based)."""
        check_grade(self, k)
        return self.a[k - 1]

    def __repr__(self):
        return f"KoetheMatrix(K={self.K}, N={self.N}, normalized={self.normalized})"


def check_grade(m: KoetheMatrix, k: int, top: int | None = None) -> None:
    top = m.K if top is None else top
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= top):
        raise GradeIndexError(f"grade {k!r} outside 1..{top}")


# -- norms -------------------------------------------------------------------


def weighted_l2(weights: np.ndarray, x: np.ndarray) -> np.ndarray | float:
    """``(sum_n |x_n|^2 w_n^2)^(1/2)`` evaluated without intermediate overflow."""
    x = np.asarray(x, dtype=float)
    w = weights if x.ndim == 1 else weights[:, None]
    v = np.abs(x) * w
    s = v.max(axis=0)
    safe = np.where(s > 0, s, 1.0)
    out = s * np.sqrt(np.sum((v / safe) ** 2, axis=0))
    return float(out) if x.ndim == 1 else out


def _check_vector(m: KoetheMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[0] != m.N:
        raise DimensionError(f"vector of shape {x.shape} does not match N={m.N}")
    return x


def sup_norm(m: KoetheMatrix, x, k: int):
    """``|x|_k = sup_n |x_n| a_{k,n}``."""
    check_grade(m, k)
    x = _check_vector(m, x)
    w = m.a[k - 1] if x.ndim == 1 else m.a[k - 1][:, None]
    out = np.max(np.abs(x) * w, axis=0)
    return float(out) if x.ndim == 1 else out


def hilbert_norm(m: KoetheMatrix, x, k: int):
    """``||x||_k = (sum_n |x_n|^2 a_{k,n}^2)^(1/2)``."""
    check_grade(m, k)
    x = _check_vector(m, x)
    return weighted_l2(m.a[k - 1], x)


# -- normalization conditions ------------------------------------------------


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of one normalization condition.

    ``margin`` is scale-free and nonnegative on success (``None`` when the
    condition is vacuous); ``worst_index`` is 1-based.
    """

    passed: bool
    margin: float | None
    worst_index: tuple[int, ...] | None = None
    values: tuple[float, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "margin": self.margin,
            "worst_index": list(self.worst_index) if self.worst_index else None,
            "values": list(self.values),
        }


@dataclass(frozen=True)
class ConditionReport:
    conditions: dict[str, ConditionResult]
    largest_entry: float
    matrix: KoetheMatrix = field(repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "K": self.matrix.K,
            "N": self.matrix.N,
            "largest_entry": self.largest_entry,
            "conditions": {name: c.to_dict() for name, c in self.conditions.items()},
        }


def _condition_sums(a: np.ndarray) -> list[float]:
    return [math.fsum(a[k] / a[k + 1]) for k in range(a.shape[0] - 1)]


# Pass/fail flags are decided in rational arithmetic on the stored doubles, so
# a rounded quotient or square can never turn a violation into a pass.  The
# float margins alongside are for reporting only.


def _q(row) -> list[Fraction]:
    return [Fraction(float(v)) for v in row]


def _squares_exact(u, v) -> bool:
    return all(x * x <= y for x, y in zip(_q(u), _q(v)))


def _sum_exact(u, v) -> Fraction:
    return sum((x / y for x, y in zip(_q(u), _q(v))), Fraction(0))


def _decay_exact(u, v) -> bool:
    # u_{n+1} / v_{n+1} <= u_n / v_n, cross-multiplied over positive entries
    u, v = _q(u), _q(v)
    return all(u[n + 1] * v[n] <= u[n] * v[n + 1] for n in range(len(u) - 1))


def _check_unit_first_row(a):
    dev = np.abs(a[0] - 1.0)
    n = int(np.argmax(dev))
    return ConditionResult(bool(np.all(a[0] == 1.0)), 0.0 - float(dev[n]), (1, n + 1))


def _check_squares(a):
    if a.shape[0] < 2:
        return ConditionResult(True, None)
    with np.errstate(over="ignore"):
        rel = 1.0 - a[:-1] ** 2 / a[1:]
    k, n = np.unravel_index(int(np.argmin(rel)), rel.shape)
    ok = all(_squares_exact(a[i], a[i + 1]) for i in range(a.shape[0] - 1))
    return ConditionResult(ok, float(rel[k, n]), (int(k) + 1, int(n) + 1))


def _check_sums(a):
    if a.shape[0] < 2:
        return ConditionResult(True, None)
    sums = _condition_sums(a)
    k = int(np.argmax(sums))
    ok = all(_sum_exact(a[i], a[i + 1]) <= 1 for i in range(a.shape[0] - 1))
    return ConditionResult(ok, 1.0 - sums[k], (k + 1,), tuple(sums))


def _check_ratio_decay(a):
    if a.shape[0] < 2 or a.shape[1] < 2:
        return ConditionResult(True, None)
    ratio = a[:-1] / a[1:]
    rel = (ratio[:, :-1] - ratio[:, 1:]) / ratio[:, :-1]
    k, n = np.unravel_index(int(np.argmin(rel)), rel.shape)
    ok = all(_decay_exact(a[i], a[i + 1]) for i in range(a.shape[0] - 1))
    return ConditionResult(ok, float(rel[k, n]), (int(k) + 1, int(n) + 1))


def verify_conditions(m: KoetheMatrix) -> ConditionReport:
    """Check the four normalization conditions exactly.

    1. ``a_{1,n} = 1``
    2. ``a_{k,n}^2 <= a_{k+1,n}``
    3. ``sum_n a_{k,n} / a_{k+1,n} <= 1``
    4. ``a_{k,n+1} / a_{k+1,n+1} <= a_{k,n} / a_{k+1,n}``

    Each entry is taken as the rational number it stores and the
    comparisons are made in :class:`fractions.Fraction` arithmetic; the
    reported sums and margins are ordinary floats.

    The returned report carries ``matrix``, a copy of ``m`` whose
    ``normalized`` flag reflects the outcome.
    """
    if not isinstance(m, KoetheMatrix):
        m = KoetheMatrix(m)
    a = m.a
    conditions = {
        "unit_first_row": _check_unit_first_row(a),
        "squares": _check_squares(a),
        "sums": _check_sums(a),
        "ratio_decay": _check_ratio_decay(a),
    }
    passed = all(c.passed for c in conditions.values())
    return ConditionReport(conditions, float(a.max()), replace(m, normalized=passed))


# -- normalizer --------------------------------------------------------------


@dataclass(frozen=True)
class NormalizationLog:
    """Record of the moves applied by :func:`normalize`.

    ``rows`` are the 1-based raw grade indices kept, ``scalars`` the factor
    each kept row was multiplied by (the first row always has factor 1).
    """

    divisor: np.ndarray
    rows: tuple[int, ...]
    scalars: tuple[float, ...]
    stopped_at: int | None = None

    @property
    def is_identity(self) -> bool:
        return (
            bool(np.all(self.divisor == 1.0))
            and self.rows == tuple(range(1, len(self.rows) + 1))
            and all(c == 1.0 for c in self.scalars)
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "divisor": self.divisor.tolist(),
            "rows": list(self.rows),
            "scalars": list(self.scalars),
            "stopped_at": self.stopped_at,
        }


def _fits(prev: np.ndarray, row: np.ndarray) -> bool:
    return _squares_exact(prev, row) and _sum_exact(prev, row) <= 1


def normalize(raw: KoetheMatrix) -> tuple[KoetheMatrix, NormalizationLog]:
    """Bring a regular, grade-monotone weight grid into normalized form.

    Divides every grade by the first one, then walks the remaining grades in
    order, multiplying each by the smallest scalar ``c >= 1`` that makes it
    dominate the previously kept grade: squares below it and row sum of
    the quotients at most 1.
    The scalar starts at ``max(1, max_n u_n^2 / v_n, sum_n u_n / v_n)`` and
    is moved up ulp by ulp only if rounding breaks an exact comparison.
    Grades whose scaled squares would overflow end the walk.
    """
    if not isinstance(raw, KoetheMatrix):
        raw = KoetheMatrix(raw)
    a = raw.a
    if a.shape[0] > 1 and not np.all(a[:-1] <= a[1:]):
        k, n = np.argwhere(~(a[:-1] <= a[1:]))[0]
        raise InvalidMatrixError(f"weights decrease in grade at a[{k + 2},{n + 1}]")
    decay = _check_ratio_decay(a)
    if not decay.passed:
        raise NotRegularError(
            f"grade ratio a_k/a_(k+1) increases in n at (k, n) = {decay.worst_index}"
        )
    if a.shape[0] < 2:
        raise InsufficientGradesError("need at least 2 grades to normalize")

    divisor = a[0].copy()
    b = a / divisor
    kept = [b[0]]
    rows = [1]
    scalars = [1.0]
    stopped_at = None
    with np.errstate(over="ignore"):
        for idx in range(1, b.shape[0]):
            u, v = kept[-1], b[idx]
            c = max(1.0, float(np.max(u**2 / v)), math.fsum(u / v))
            scaled = c * v
            while np.all(np.isfinite(scaled)) and not _fits(u, scaled):
                c = float(np.nextafter(c, np.inf))
                scaled = c * v
            if not (np.all(np.isfinite(scaled)) and np.all(np.isfinite(scaled**2))):
                stopped_at = idx + 1
                break
            kept.append(scaled)
            rows.append(idx + 1)
            scalars.append(c)

    if len(kept) < 2:
        raise InsufficientGradesError(
            f"only {len(kept)} grade(s) selectable before overflow at raw grade {stopped_at}"
        )
    report = verify_conditions(KoetheMatrix(np.vstack(kept)))
    if not report.passed:
        bad = next(name for name, c in report.conditions.items() if not c.passed)
        worst = report.conditions[bad].worst_index
        raise NotRegularError(f"normalization failed: condition {bad!r} blocked at {worst}")
    log = NormalizationLog(_frozen(divisor), tuple(rows), tuple(scalars), stopped_at)
    return report.matrix, log


# -- construction from declarative configs -----------------------------------


def _decimal(v) -> float:
    try:
        return float(str(v).strip())
    except ValueError as exc:
        raise ConfigError(f"not a decimal number: {v!r}") from exc


def _int(cfg: Mapping, key: str) -> int:
    if key not in cfg:
        raise ConfigError(f"matrix config is missing {key!r}")
    val = cfg[key]
    if isinstance(val, bool) or int(val) != val or int(val) < 1:
        raise ConfigError(f"{key!r} must be a positive integer, got {val!r}")
    return int(val)


def koethe_from_config(cfg: Mapping[str, Any]) -> KoetheMatrix:
    """Build a :class:`KoetheMatrix` from a declarative mapping.

    Accepted forms::

        {"grid": [...row-major decimals...], "K": K, "N": N}
        {"family": "power", "exponents": [e_1, ...], "N": N}      # a = n^e_k
        {"family": "geometric", "base": b, "exponents": [...], "N": N}  # a = b^(e_k n)
    """
    if not isinstance(cfg, Mapping):
        raise ConfigError("matrix config must be a mapping")
    if "grid" in cfg:
        K, N = _int(cfg, "K"), _int(cfg, "N")
        values = [_decimal(v) for v in cfg["grid"]]
        if len(values) != K * N:
            raise ConfigError(f"grid has {len(values)} entries, expected K*N = {K * N}")
        return KoetheMatrix(np.array(values).reshape(K, N))
    family = cfg.get("family")
    if family not in ("power", "geometric"):
        raise ConfigError(f"unknown matrix family {family!r}")
    exps = np.array([_decimal(e) for e in cfg.get("exponents", [])])
    if exps.size == 0:
        raise ConfigError("matrix family needs a nonempty 'exponents' list")
    N = _int(cfg, "N")
    n = np.arange(1, N + 1, dtype=float)
    with np.errstate(over="ignore"):
        if family == "power":
            grid = n[None, :] ** exps[:, None]
        else:
            base = _decimal(cfg.get("base", 4))
            grid = base ** (exps[:, None] * n[None, :])
    return KoetheMatrix(grid)


def demo_matrix() -> KoetheMatrix:
    """``a_{k,n} = 4^(e_k n)`` with ``e = (0, 1, 3, 7)``, ``K = N = 4``."""
    return koethe_from_config({"family": "geometric", "base": 4, "exponents": [0, 1, 3, 7], "N": 4})
