"""Approximate propagation of posterior second moments on polytrees.

Mirrors the mean-propagation layer with matrix-valued messages over
alternative pairs (s, t): pi' carries E[P(f^s)P(f^t)] information downward,
lambda' upward, and the posterior second-moment matrix of a node is
alpha^2 * lambda'(s,t) * pi'(s,t) entrywise, with alpha taken from the mean
layer. Expected CPT products come from the Dirichlet count formulas:
within one CPT column the closed-form second/cross moments, across two
different columns the product of the column means (distinct columns are
independent).

The method is approximate: posterior variances can come out negative, in
which case the raw value is reported together with a flag, never clamped.
"""
from __future__ import annotations

from dataclasses import dataclass
from collections import deque

import numpy as np

from . import dirichlet
from .model import Network
from .meanprop import PropagationState

__all__ = [
    "MomentState",
    "VarianceResult",
    "cpt_cross_moment",
    "initialize_moments",
    "assert_evidence",
    "posterior_second_moment",
    "posterior_variance",
]


@dataclass(frozen=True)
class VarianceResult:
    """Posterior variance with a pathology flag (negative, not clamped)."""

    value: float
    negative: bool


def cpt_cross_moment(net: Network, node_id: str, s: int, t: int, u: int, v: int) -> float:
    """E[P(f^s | config u) P(f^t | config v)] for one node's CPT.

    Same configuration: the within-column Dirichlet moments. Different
    configurations: product of the two column means, since distinct columns
    are independent.
    """
    node = net.node(node_id)
    if not 0 <= s < node.alternatives or not 0 <= t < node.alternatives:
        raise IndexError("alternative index out of range")
    if not 0 <= u < len(node.cpt) or not 0 <= v < len(node.cpt):
        raise IndexError("parent configuration index out of range")
    if u == v:
        if s == t:
            return dirichlet.second_moment(node.cpt[u], s)
        return dirichlet.cross_moment(node.cpt[u], s, t)
    return dirichlet.mean(node.cpt[u], s) * dirichlet.mean(node.cpt[v], t)


def _pair_tensor(net: Network, i: int) -> np.ndarray:
    """E[P(f^s|u)P(f^t|v)] reshaped to (parent alts..., parent alts..., s, t)."""
    node = net.nodes[i]
    rows = node.cpt
    c = len(rows)
    t = node.alternatives
    means = np.array([dirichlet.mean_vector(r) for r in rows])
    tensor = means[:, None, :, None] * means[None, :, None, :]
    for u in range(c):
        tensor[u, u] = dirichlet.moment_matrix(rows[u])
    shape = [net.nodes[p].alternatives for p in net.parent_indices[i]]
    return tensor.reshape(shape + shape + [t, t])


class MomentState:
    """Second-moment layer wrapped around a mean PropagationState."""

    def __init__(self, net: Network):
        self.net = net
        self.mean = PropagationState(net)
        self._tensor = [_pair_tensor(net, i) for i in range(len(net.nodes))]
        self.pim: list[np.ndarray] = [None] * len(net.nodes)  # type: ignore[list-item]
        self.pim_msg: dict[tuple[int, int], np.ndarray] = {}
        self.lamm_msg: dict[tuple[int, int], np.ndarray] = {}
        for i, node in enumerate(net.nodes):
            for p in net.parent_indices[i]:
                tp = net.nodes[p].alternatives
                self.lamm_msg[(i, p)] = np.ones((tp, tp))
        for i in net.topological_order:
            self.pim[i] = self._compute_pim(i)
            for c in net.children[i]:
                self.pim_msg[(i, c)] = self.pim[i]

    @property
    def evidence(self) -> dict[int, int]:
        return self.mean.evidence

    # -- message algebra ---------------------------------------------------

    def _compute_pim(self, i: int) -> np.ndarray:
        parents = self.net.parent_indices[i]
        tensor = self._tensor[i]
        if not parents:
            return tensor
        k = len(parents)
        # labels: u_1..u_k -> 1..k, v_1..v_k -> k+1..2k, (s, t) -> (2k+1, 2k+2)
        operands: list = [tensor, list(range(1, 2 * k + 3))]
        for m, p in enumerate(parents):
            operands.extend([self.pim_msg[(p, i)], [m + 1, k + m + 1]])
        return np.einsum(*operands, [2 * k + 1, 2 * k + 2])

    def _lambda_total(self, i: int) -> np.ndarray:
        t = self.net.nodes[i].alternatives
        if i in self.evidence:
            out = np.zeros((t, t))
            alt = self.evidence[i]
            out[alt, alt] = 1.0
            return out
        out = np.ones((t, t))
        for c in self.net.children[i]:
            out = out * self.lamm_msg[(c, i)]
        return out

    def _lambda_message(self, i: int, target: int) -> np.ndarray:
        parents = self.net.parent_indices[i]
        k = len(parents)
        pos = parents.index(target)
        operands: list = [
            self._tensor[i],
            list(range(1, 2 * k + 3)),
            self._lambda_total(i),
            [2 * k + 1, 2 * k + 2],
        ]
        for m, p in enumerate(parents):
            if m != pos:
                operands.extend([self.pim_msg[(p, i)], [m + 1, k + m + 1]])
        return np.einsum(*operands, [pos + 1, k + pos + 1])

    def _pi_message(self, i: int, child: int) -> np.ndarray:
        if i in self.evidence:
            t = self.net.nodes[i].alternatives
            out = np.zeros((t, t))
            alt = self.evidence[i]
            out[alt, alt] = 1.0
            return out
        out = self.pim[i]
        for c in self.net.children[i]:
            if c != child:
                out = out * self.lamm_msg[(c, i)]
        return out

    # -- operations ----------------------------------------------------------

    def assert_evidence(self, node_id: str, alt: int) -> "MomentState":
        net = self.net
        self.mean.assert_evidence(node_id, alt)
        i = net.index[node_id]

        t = net.nodes[i].alternatives
        indicator = np.zeros((t, t))
        indicator[alt, alt] = 1.0
        self.pim[i] = indicator

        queue: deque[tuple[int, int]] = deque()
        for c in net.children[i]:
            self.pim_msg[(i, c)] = indicator
            queue.append((c, i))
        for p in net.parent_indices[i]:
            self.lamm_msg[(i, p)] = self._lambda_message(i, p)
            queue.append((p, i))
        while queue:
            j, sender = queue.popleft()
            self._receive(j, sender, queue)
        return self

    def _receive(self, j: int, sender: int, queue: deque[tuple[int, int]]) -> None:
        net = self.net
        parents = net.parent_indices[j]
        if j in self.evidence:
            if sender in parents:
                for p in parents:
                    if p != sender:
                        self.lamm_msg[(j, p)] = self._lambda_message(j, p)
                        queue.append((p, j))
            return
        if parents:
            self.pim[j] = self._compute_pim(j)
        for c in net.children[j]:
            if c != sender:
                self.pim_msg[(j, c)] = self._pi_message(j, c)
                queue.append((c, j))
        for p in parents:
            if p != sender:
                self.lamm_msg[(j, p)] = self._lambda_message(j, p)
                queue.append((p, j))

    def second_moment_matrix(self, node_id: str) -> np.ndarray:
        i = self.net.index[node_id]
        alpha = self.mean.normalizer_batch(node_id)[0]
        return alpha * alpha * self._lambda_total(i) * self.pim[i]

    def variance(self, node_id: str, alt: int) -> VarianceResult:
        node = self.net.node(node_id)
        if not 0 <= alt < node.alternatives:
            raise IndexError(f"alternative {alt} out of range for node {node_id!r}")
        m2 = self.second_moment_matrix(node_id)[alt, alt]
        mean = self.mean.posterior_batch(node_id)[0, alt]
        value = float(m2 - mean * mean)
        return VarianceResult(value=value, negative=value < 0.0)


def initialize_moments(net: Network) -> MomentState:
    """Top-down second-moment matrices with lambda' = 1 everywhere."""
    return MomentState(net)


def assert_evidence(mstate: MomentState, node_id: str, alt: int) -> MomentState:
    """Instantiate a node in both layers and propagate to quiescence."""
    return mstate.assert_evidence(node_id, alt)


def posterior_second_moment(mstate: MomentState, node_id: str) -> np.ndarray:
    """Matrix of E[P(f^s)P(f^t)] estimates, alpha^2 * lambda' * pi' entrywise."""
    return mstate.second_moment_matrix(node_id)


def posterior_variance(mstate: MomentState, node_id: str, alt: int) -> VarianceResult:
    """M[alt][alt] - mean[alt]^2 with the negative-variance flag."""
    return mstate.variance(node_id, alt)
