"""Exact inference for point parameters by explicit joint-space summation.

This is the deliberately simple, trusted path: the inner engine of the
Monte Carlo method on general networks and the correctness oracle for mean
propagation on polytrees. The joint state space is capped by a budget
(default 2^20 states) beyond which operations refuse to run.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import (
    Evidence,
    EvidenceImpossibleError,
    Network,
    PointParameters,
    check_evidence,
)

__all__ = [
    "FullAssignment",
    "BudgetExceededError",
    "DEFAULT_BUDGET",
    "joint_probability",
    "evidence_probability",
    "conditional",
    "batched_query",
]

DEFAULT_BUDGET = 2**20


class BudgetExceededError(Exception):
    """Joint state space larger than the enumeration budget."""


@dataclass(frozen=True)
class FullAssignment:
    """One alternative index per node, aligned with Network.nodes."""

    values: tuple[int, ...]


def _state_space(net: Network) -> int:
    size = 1
    for n in net.nodes:
        size *= n.alternatives
    return size


def _check_budget(net: Network, budget: int) -> None:
    if _state_space(net) > budget:
        raise BudgetExceededError(
            f"joint state space {_state_space(net)} exceeds budget {budget}"
        )


def joint_probability(net: Network, u: PointParameters, x: FullAssignment) -> float:
    """Product over nodes of the CPT entry selected by x."""
    values = x.values
    if len(values) != len(net.nodes):
        raise ValueError("assignment length does not match node count")
    p = 1.0
    for i, node in enumerate(net.nodes):
        row = net.config_index(i, (values[pi] for pi in net.parent_indices[i]))
        p *= u.tables[i][row, values[i]]
    return p


def _assignments(net: Network, w: Evidence):
    """All full assignments consistent with the evidence."""
    fixed = {net.index[node_id]: alt for node_id, alt in w.items()}
    ranges = [
        (fixed[i],) if i in fixed else range(n.alternatives)
        for i, n in enumerate(net.nodes)
    ]
    return itertools.product(*ranges)


def evidence_probability(
    net: Network, u: PointParameters, w: Evidence, budget: int = DEFAULT_BUDGET
) -> float:
    """P(W | U): total probability of all completions of the evidence."""
    check_evidence(net, w)
    _check_budget(net, budget)
    total = 0.0
    for values in _assignments(net, w):
        total += joint_probability(net, u, FullAssignment(values))
    return total


def conditional(
    net: Network,
    u: PointParameters,
    node: str,
    w: Evidence,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """P(node | W, U) as a vector over the node's alternatives."""
    check_evidence(net, w)
    if node in w.assignments:
        raise ValueError(f"query node {node!r} is already instantiated")
    _check_budget(net, budget)
    qi = net.index[node]
    out = np.zeros(net.nodes[qi].alternatives)
    for values in _assignments(net, w):
        out[values[qi]] += joint_probability(net, u, FullAssignment(values))
    total = out.sum()
    if total <= 0.0:
        raise EvidenceImpossibleError("evidence has probability 0 under these parameters")
    return out / total


def batched_query(
    net: Network,
    tables: list[np.ndarray],
    node: str,
    w: Evidence,
    budget: int = DEFAULT_BUDGET,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (posterior, weight) for a batch of point parameters.

    Parameters
    ----------
    tables : list of (batch, configurations, alternatives) arrays
        One stacked table per node, aligned with Network.nodes.

    Returns
    -------
    posterior : (batch, alternatives) array, rows normalized where weight > 0
    weight : (batch,) array of P(W | U_j)
    """
    check_evidence(net, w)
    if node in w.assignments:
        raise ValueError(f"query node {node!r} is already instantiated")
    _check_budget(net, budget)
    qi = net.index[node]
    batch = tables[0].shape[0]
    acc = np.zeros((batch, net.nodes[qi].alternatives))
    for values in _assignments(net, w):
        term = np.ones(batch)
        for i in range(len(net.nodes)):
            row = net.config_index(i, (values[pi] for pi in net.parent_indices[i]))
            term = term * tables[i][:, row, values[i]]
        acc[:, values[qi]] += term
    weight = acc.sum(axis=1)
    posterior = np.zeros_like(acc)
    ok = weight > 0
    posterior[ok] = acc[ok] / weight[ok, None]
    return posterior, weight
