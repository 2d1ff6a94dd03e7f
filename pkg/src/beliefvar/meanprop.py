"""Pearl-style propagation of expected probabilities on polytrees.

Messages are unnormalized. Instantiated nodes clamp both pi and lambda to
the indicator vector, send indicator pi messages to children, and send
lambda messages to parents computed with the indicator in place of the
children product (so colliders still explain away through the other
parents' pi messages). The per-node normalizer alpha = 1/sum(lambda*pi) is
exposed because the second-moment layer multiplies by alpha^2.

The same engine runs on the network's Dirichlet-mean tables (the public
operations below) or on any stack of sampled point-parameter tables with a
leading batch axis (the Monte Carlo inner engine).
"""
from __future__ import annotations

from collections import deque

import numpy as np

from .model import (
    Evidence,
    EvidenceImpossibleError,
    Network,
    PointParameters,
    StructureError,
    point_view,
)

__all__ = [
    "PropagationState",
    "EvidenceImpossibleError",
    "initialize",
    "assert_evidence",
    "posterior_mean",
    "normalizer",
]

NOT_POLYTREE = "singly connected network required"


def _require_polytree(net: Network) -> None:
    if not net.is_polytree:
        raise StructureError(NOT_POLYTREE)


class PropagationState:
    """Mutable propagation state over one network.

    Single-writer: `assert_evidence` mutates the state; queries are
    read-only. `batch` > 1 means one propagation per sampled table stack.
    """

    def __init__(self, net: Network, tables: list[np.ndarray] | None = None, strict: bool = True):
        _require_polytree(net)
        self.net = net
        if tables is None:
            tables = [t[None, :, :] for t in point_view(net).tables]
        self.batch = tables[0].shape[0]
        self.strict = strict
        # CPTs reshaped to (batch, t_p1, ..., t_pk, t) for einsum contraction.
        self._cpt: list[np.ndarray] = []
        for i, node in enumerate(net.nodes):
            shape = [self.batch] + [net.nodes[p].alternatives for p in net.parent_indices[i]]
            shape.append(node.alternatives)
            self._cpt.append(np.ascontiguousarray(tables[i].reshape(shape)))
        self.evidence: dict[int, int] = {}
        self.weight = np.ones(self.batch)
        self.pi: list[np.ndarray] = [None] * len(net.nodes)  # type: ignore[list-item]
        self.lam: list[np.ndarray] = []
        self.pi_msg: dict[tuple[int, int], np.ndarray] = {}
        self.lam_msg: dict[tuple[int, int], np.ndarray] = {}
        for i, node in enumerate(net.nodes):
            ones = np.ones((self.batch, node.alternatives))
            self.lam.append(ones.copy())
            for p in net.parent_indices[i]:
                self.lam_msg[(i, p)] = np.ones((self.batch, net.nodes[p].alternatives))
        for i in net.topological_order:
            self.pi[i] = self._compute_pi(i)
            for c in net.children[i]:
                self.pi_msg[(i, c)] = self.pi[i]

    # -- message algebra -------------------------------------------------

    def _compute_pi(self, i: int) -> np.ndarray:
        """pi(f) = sum over parent configurations of CPT * incoming pi messages."""
        parents = self.net.parent_indices[i]
        cpt = self._cpt[i]
        if not parents:
            return cpt
        k = len(parents)
        operands: list = [cpt, [0, *range(1, k + 2)]]
        for m, p in enumerate(parents):
            operands.extend([self.pi_msg[(p, i)], [0, m + 1]])
        return np.einsum(*operands, [0, k + 1])

    def _lambda_message(self, i: int, target: int) -> np.ndarray:
        """Message from node i to its parent `target`."""
        parents = self.net.parent_indices[i]
        k = len(parents)
        lam_total = self._lambda_total(i)
        cpt = self._cpt[i]
        pos = parents.index(target)
        operands: list = [cpt, [0, *range(1, k + 2)], lam_total, [0, k + 1]]
        for m, p in enumerate(parents):
            if m != pos:
                operands.extend([self.pi_msg[(p, i)], [0, m + 1]])
        return np.einsum(*operands, [0, pos + 1])

    def _lambda_total(self, i: int) -> np.ndarray:
        if i in self.evidence:
            return self.lam[i]
        out = np.ones((self.batch, self.net.nodes[i].alternatives))
        for c in self.net.children[i]:
            out = out * self.lam_msg[(c, i)]
        return out

    def _pi_message(self, i: int, child: int) -> np.ndarray:
        if i in self.evidence:
            return self.pi[i]
        out = self.pi[i]
        for c in self.net.children[i]:
            if c != child:
                out = out * self.lam_msg[(c, i)]
        return out

    def _unnormalized(self, i: int) -> np.ndarray:
        return self.lam[i] * self.pi[i]

    # -- public operations -------------------------------------------------

    def assert_evidence(self, node_id: str, alt: int) -> "PropagationState":
        net = self.net
        i = net.index[node_id]
        if i in self.evidence:
            raise ValueError(f"node {node_id!r} is already instantiated")
        if not 0 <= alt < net.nodes[i].alternatives:
            raise ValueError(f"alternative {alt} out of range for node {node_id!r}")

        post = self.posterior_batch(node_id)
        self.weight = self.weight * post[:, alt]
        if self.strict and not np.all(self.weight > 0.0):
            raise EvidenceImpossibleError(
                f"evidence {node_id}={alt} has probability 0 given prior assertions"
            )

        self.evidence[i] = alt
        indicator = np.zeros((self.batch, net.nodes[i].alternatives))
        indicator[:, alt] = 1.0
        self.pi[i] = indicator
        self.lam[i] = indicator.copy()

        queue: deque[tuple[int, int]] = deque()
        for c in net.children[i]:
            self.pi_msg[(i, c)] = indicator
            queue.append((c, i))
        for p in net.parent_indices[i]:
            self.lam_msg[(i, p)] = self._lambda_message(i, p)
            queue.append((p, i))

        while queue:
            j, sender = queue.popleft()
            self._receive(j, sender, queue)
        return self

    def _receive(self, j: int, sender: int, queue: deque[tuple[int, int]]) -> None:
        net = self.net
        parents = net.parent_indices[j]
        if j in self.evidence:
            # Clamped node: an updated pi message from one parent still
            # changes the lambda messages to the other parents (explaining
            # away); everything else is blocked.
            if sender in parents:
                for p in parents:
                    if p != sender:
                        self.lam_msg[(j, p)] = self._lambda_message(j, p)
                        queue.append((p, j))
            return
        if parents:
            self.pi[j] = self._compute_pi(j)
        self.lam[j] = self._lambda_total(j)
        for c in net.children[j]:
            if c != sender:
                self.pi_msg[(j, c)] = self._pi_message(j, c)
                queue.append((c, j))
        for p in parents:
            if p != sender:
                self.lam_msg[(j, p)] = self._lambda_message(j, p)
                queue.append((p, j))

    def posterior_batch(self, node_id: str) -> np.ndarray:
        i = self.net.index[node_id]
        raw = self._unnormalized(i)
        total = raw.sum(axis=1, keepdims=True)
        ok = total[:, 0] > 0
        out = np.zeros_like(raw)
        out[ok] = raw[ok] / total[ok]
        if self.strict and not np.all(ok):
            raise EvidenceImpossibleError("evidence has probability 0")
        return out

    def normalizer_batch(self, node_id: str) -> np.ndarray:
        i = self.net.index[node_id]
        total = self._unnormalized(i).sum(axis=1)
        with np.errstate(divide="ignore"):
            return np.where(total > 0, 1.0 / total, np.inf)


def initialize(net: Network) -> PropagationState:
    """State with lambda = 1 everywhere and pi computed top-down from means."""
    return PropagationState(net)


def assert_evidence(state: PropagationState, node_id: str, alt: int) -> PropagationState:
    """Instantiate a node and propagate to quiescence; returns the state."""
    return state.assert_evidence(node_id, alt)


def posterior_mean(state: PropagationState, node_id: str) -> np.ndarray:
    """alpha * lambda * pi, normalized to sum to 1."""
    return state.posterior_batch(node_id)[0]


def normalizer(state: PropagationState, node_id: str) -> float:
    """The alpha making alpha * lambda * pi sum to 1 at this node."""
    return float(state.normalizer_batch(node_id)[0])


def apply_evidence(state: PropagationState, w: Evidence) -> PropagationState:
    """Assert an evidence mapping in its iteration order."""
    for node_id, alt in w.items():
        state.assert_evidence(node_id, alt)
    return state
