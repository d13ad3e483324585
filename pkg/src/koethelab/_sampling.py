"""Seeded random test vectors scaled to a weight sequence."""
from __future__ import annotations

import numpy as np


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def weighted_box(rng: np.random.Generator, weights: np.ndarray, count: int, *, signed: bool = True) -> np.ndarray:
    """``count`` columns ``u / weights`` with ``u`` uniform in the unit box.

    Every other column is made sparse (about half its entries zeroed) so
    that samples near the faces of the box are represented as well.
    """
    N = weights.shape[0]
    u = rng.uniform(-1.0 if signed else 0.0, 1.0, size=(N, count))
    drop = rng.random((N, count)) < 0.5
    drop[:, ::2] = False
    u[drop] = 0.0
    empty = ~u.any(axis=0)
    if empty.any():
        u[0, empty] = 1.0
    return u / weights[:, None]
