"""Small report records shared by the verification suites."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

# Relative headroom for comparing two computed quantities that are equal
# or nearly equal in exact arithmetic.
RTOL = 1e-12


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v != v or v in (float("inf"), float("-inf")):
            return str(v)
        return v
    if hasattr(v, "to_dict"):
        return v.to_dict()
    return v


def plain(v) -> Any:
    """Convert nested reports/arrays into JSON-ready builtins."""
    return _plain(v)


@dataclass
class Check:
    """Worst observed ``lhs / rhs`` of one inequality against its bound."""

    name: str
    worst_ratio: float
    bound: float = 1.0
    tol: float = 0.0
    samples: int = 0
    witness: Any = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.worst_ratio <= self.bound * (1.0 + self.tol))

    def to_dict(self) -> dict:
        return plain({
            "name": self.name,
            "passed": self.passed,
            "worst_ratio": self.worst_ratio,
            "bound": self.bound,
            "tol": self.tol,
            "samples": self.samples,
            "witness": self.witness,
            **({"detail": self.detail} if self.detail else {}),
        })

    def __str__(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: worst ratio {self.worst_ratio:.6g} (bound {self.bound:.6g}, {self.samples} samples)"


def ratio_check(name: str, lhs, rhs, *, bound: float = 1.0, tol: float = 0.0, labels=None, detail=None) -> Check:
    """Build a :class:`Check` from paired arrays of left and right sides.

    Pairs with ``rhs == 0`` count as ratio 0 when ``lhs == 0`` too and as
    ``inf`` otherwise.
    """
    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, 0.0))
    i = int(np.argmax(ratios)) if ratios.size else 0
    worst = float(ratios[i]) if ratios.size else 0.0
    witness = labels[i] if labels is not None and ratios.size else i
    return Check(name, worst, bound, tol, int(ratios.size), witness, dict(detail or {}))


@dataclass
class SuiteReport:
    """A named collection of checks plus free-form values."""

    name: str
    checks: list[Check] = field(default_factory=list)
    values: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return plain({
            "name": self.name,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            **({"values": self.values} if self.values else {}),
        })
