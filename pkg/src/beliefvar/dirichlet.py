"""Closed-form moments and sampling for Dirichlet-distributed probability vectors.

A vector of nonnegative counts (a_1, ..., a_t) stands for a Dirichlet
distribution with density parameters (a_1 + 1, ..., a_t + 1). That is the
parameterization under which the moment formulas below are exact, and the
sampler draws from the same distribution so empirical moments converge to
the formulas.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DirichletCounts",
    "mean",
    "mean_vector",
    "second_moment",
    "cross_moment",
    "variance",
    "moment_matrix",
    "sample",
    "sample_block",
    "substream",
]


@dataclass(frozen=True)
class DirichletCounts:
    """Counts a_1..a_t for one CPT column or root prior.

    Parameters
    ----------
    a : array-like of float
        Nonnegative finite counts, length t >= 2. Real values are allowed;
        the moment formulas are well defined for any nonnegative reals.
    """

    a: np.ndarray = field()

    def __post_init__(self) -> None:
        arr = np.asarray(self.a, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("counts must be a 1-D vector of length >= 2")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("counts must be finite and nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @property
    def t(self) -> int:
        return self.a.size


def _check_index(c: DirichletCounts, i: int) -> None:
    if not 0 <= i < c.t:
        raise IndexError(f"alternative index {i} out of range for t={c.t}")


def mean(c: DirichletCounts, i: int) -> float:
    """E(P_i) = (a_i + 1) / (sum_k a_k + t)."""
    _check_index(c, i)
    return (c.a[i] + 1.0) / (c.a.sum() + c.t)


def mean_vector(c: DirichletCounts) -> np.ndarray:
    """All component means; sums to 1 exactly up to rounding."""
    return (c.a + 1.0) / (c.a.sum() + c.t)


def second_moment(c: DirichletCounts, i: int) -> float:
    """E(P_i^2) = (a_i + 2) / (sum_k a_k + t + 1) * E(P_i)."""
    _check_index(c, i)
    s = c.a.sum() + c.t
    return (c.a[i] + 2.0) / (s + 1.0) * ((c.a[i] + 1.0) / s)


def cross_moment(c: DirichletCounts, i: int, j: int) -> float:
    """E(P_i P_j) = (a_i + 1)(a_j + 1) / ((sum + t + 1)(sum + t)), i != j.

    Raises ValueError when i == j; the same-component moment follows a
    different formula and callers must use `second_moment` explicitly.
    """
    _check_index(c, i)
    _check_index(c, j)
    if i == j:
        raise ValueError("cross_moment requires i != j; use second_moment")
    s = c.a.sum() + c.t
    return (c.a[i] + 1.0) * (c.a[j] + 1.0) / ((s + 1.0) * s)


def variance(c: DirichletCounts, i: int) -> float:
    """V(P_i) = E(P_i^2) - E(P_i)^2; nonnegative for all valid counts."""
    m = mean(c, i)
    return second_moment(c, i) - m * m


def moment_matrix(c: DirichletCounts) -> np.ndarray:
    """Matrix of E(P_s P_t): second moments on the diagonal, cross moments off it.

    Row s sums to E(P_s), an identity used as a propagation-layer check.
    """
    s = c.a.sum() + c.t
    ap1 = c.a + 1.0
    m = np.outer(ap1, ap1) / ((s + 1.0) * s)
    np.fill_diagonal(m, (c.a + 2.0) / (s + 1.0) * (ap1 / s))
    return m


def sample(c: DirichletCounts, stream: np.random.Generator) -> np.ndarray:
    """One draw from Dirichlet(a + 1); entries in (0,1) summing to 1."""
    return stream.dirichlet(c.a + 1.0)


def sample_block(c: DirichletCounts, stream: np.random.Generator, size: int) -> np.ndarray:
    """A (size, t) block of independent draws from Dirichlet(a + 1)."""
    return stream.dirichlet(c.a + 1.0, size=size)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Reproducible generator for (seed, key...) independent of call order."""
    return np.random.default_rng(np.random.SeedSequence((seed, *key)))
