"""Mean propagation: expected-probability message passing on polytrees.

The trusted reference is exact enumeration on the mean point parameters;
multilinearity of the posterior in the CPT entries makes the two agree
exactly, which is asserted to 1e-10 on random polytrees.
"""
from __future__ import annotations

import numpy as np
import pytest

from beliefvar.dirichlet import DirichletCounts
from beliefvar.enumeration import conditional
from beliefvar.meanprop import (
    NOT_POLYTREE,
    PropagationState,
    apply_evidence,
    initialize,
    normalizer,
    posterior_mean,
)
from beliefvar.model import (
    Evidence,
    EvidenceImpossibleError,
    Node,
    StructureError,
    build_network,
    point_view,
)

from polytrees import random_evidence, random_polytree


def sym_star(a: float, n_children: int):
    col = DirichletCounts([a, a])
    nodes = [Node(id="E", alternatives=2, parents=(), cpt=(col,))]
    for k in range(n_children):
        nodes.append(Node(id=f"F{k}", alternatives=2, parents=("E",), cpt=(col, col)))
    return build_network("star", nodes)


def asymmetric_net():
    """Counts whose means are P(f1|e1)=0.8, P(f1|e2)=0.4 over a fair root."""
    return build_network(
        "asym",
        [
            Node(id="E", alternatives=2, parents=(), cpt=(DirichletCounts([0, 0]),)),
            Node(
                id="F",
                alternatives=2,
                parents=("E",),
                cpt=(DirichletCounts([3, 0]), DirichletCounts([1, 2])),
            ),
        ],
    )


def diamond_net():
    col = DirichletCounts([0, 0])
    return build_network(
        "diamond",
        [
            Node(id="A", alternatives=2, parents=(), cpt=(col,)),
            Node(id="B", alternatives=2, parents=("A",), cpt=(col, col)),
            Node(id="C", alternatives=2, parents=("A",), cpt=(col, col)),
            Node(id="D", alternatives=2, parents=("B", "C"), cpt=(col,) * 4),
        ],
    )


class TestInitialize:
    def test_root_prior_symmetric(self):
        state = initialize(sym_star(0, 1))
        np.testing.assert_allclose(posterior_mean(state, "E"), [0.5, 0.5], atol=1e-15)

    @pytest.mark.parametrize("a", [0, 1, 5, 20])
    def test_chain_priors_symmetric(self, a):
        col = DirichletCounts([a, a])
        net = build_network(
            "chain",
            [
                Node(id="E", alternatives=2, parents=(), cpt=(col,)),
                Node(id="F", alternatives=2, parents=("E",), cpt=(col, col)),
                Node(id="G", alternatives=2, parents=("F",), cpt=(col, col)),
            ],
        )
        state = initialize(net)
        for node in ("E", "F", "G"):
            np.testing.assert_allclose(posterior_mean(state, node), [0.5, 0.5], atol=1e-12)

    def test_child_prior_mixes_parent_means(self):
        net = build_network(
            "mix",
            [
                Node(id="E", alternatives=2, parents=(), cpt=(DirichletCounts([1, 3]),)),
                Node(
                    id="F",
                    alternatives=2,
                    parents=("E",),
                    cpt=(DirichletCounts([3, 1]), DirichletCounts([1, 3])),
                ),
            ],
        )
        state = initialize(net)
        np.testing.assert_allclose(posterior_mean(state, "F"), [4 / 9, 5 / 9], atol=1e-12)
        np.testing.assert_allclose(
            posterior_mean(state, "F"),
            conditional(net, point_view(net), "F", Evidence({})),
            atol=1e-12,
        )

    def test_requires_polytree(self):
        with pytest.raises(StructureError, match=NOT_POLYTREE):
            initialize(diamond_net())


class TestAssertEvidence:
    def test_symmetric_child_instantiation(self):
        state = initialize(sym_star(0, 1))
        state.assert_evidence("F0", 0)
        np.testing.assert_allclose(posterior_mean(state, "E"), [0.5, 0.5], atol=1e-12)
        assert normalizer(state, "E") == pytest.approx(2.0, abs=1e-12)

    def test_asymmetric_posterior_matches_enumeration(self):
        net = asymmetric_net()
        state = initialize(net)
        state.assert_evidence("F", 0)
        np.testing.assert_allclose(posterior_mean(state, "E"), [2 / 3, 1 / 3], atol=1e-12)

    def test_instantiated_node_is_degenerate(self):
        state = initialize(sym_star(1, 2))
        state.assert_evidence("F1", 1)
        np.testing.assert_allclose(posterior_mean(state, "F1"), [0.0, 1.0], atol=0)

    def test_double_assert_rejected(self):
        state = initialize(sym_star(0, 1))
        state.assert_evidence("F0", 0)
        with pytest.raises(ValueError, match="already instantiated"):
            state.assert_evidence("F0", 1)

    def test_impossible_evidence_raises(self):
        net = sym_star(0, 1)
        tables = [np.array([[1.0, 0.0]]), np.array([[1.0, 0.0], [0.5, 0.5]])]
        state = PropagationState(net, tables=tables)
        with pytest.raises(EvidenceImpossibleError):
            state.assert_evidence("F0", 1)


class TestNormalizer:
    def test_one_without_evidence(self):
        state = initialize(sym_star(0, 2))
        assert normalizer(state, "E") == pytest.approx(1.0)

    def test_two_children_alpha_four(self):
        state = initialize(sym_star(0, 2))
        apply_evidence(state, Evidence({"F0": 0, "F1": 0}))
        assert normalizer(state, "E") == pytest.approx(4.0, abs=1e-12)


class TestOracleEquivalence:
    def test_matches_enumeration_on_random_polytrees(self):
        rng = np.random.default_rng(2024)
        for _ in range(40):
            net = random_polytree(rng)
            w, query = random_evidence(rng, net)
            state = initialize(net)
            apply_evidence(state, w)
            expected = conditional(net, point_view(net), query, w)
            np.testing.assert_allclose(
                posterior_mean(state, query), expected, atol=1e-10
            )

    def test_evidence_order_independent(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            net = random_polytree(rng, max_nodes=7)
            w, query = random_evidence(rng, net, max_evidence=3)
            if len(w) < 2:
                continue
            items = list(w.items())
            state_a = initialize(net)
            for node_id, alt in items:
                state_a.assert_evidence(node_id, alt)
            state_b = initialize(net)
            for node_id, alt in reversed(items):
                state_b.assert_evidence(node_id, alt)
            np.testing.assert_allclose(
                posterior_mean(state_a, query),
                posterior_mean(state_b, query),
                atol=1e-10,
            )

    def test_messages_quiescent_after_propagation(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            net = random_polytree(rng, max_nodes=7)
            w, _ = random_evidence(rng, net, max_evidence=2)
            state = initialize(net)
            apply_evidence(state, w)
            for (src, dst), stored in list(state.pi_msg.items()):
                if src not in state.evidence:
                    np.testing.assert_allclose(
                        state._pi_message(src, dst), stored, atol=1e-12
                    )
            for (src, dst), stored in list(state.lam_msg.items()):
                np.testing.assert_allclose(
                    state._lambda_message(src, dst), stored, atol=1e-12
                )

    def test_posterior_sums_to_one(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            net = random_polytree(rng)
            w, query = random_evidence(rng, net)
            state = initialize(net)
            apply_evidence(state, w)
            for node in net.nodes:
                if node.id in w.assignments:
                    continue
                assert posterior_mean(state, node.id).sum() == pytest.approx(
                    1.0, abs=1e-10
                )
