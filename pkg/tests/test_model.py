"""Network document parsing, structural validation, and the point view."""
from __future__ import annotations

import json

import numpy as np
import pytest

from beliefvar.model import (
    DocumentError,
    Evidence,
    Node,
    StructureError,
    build_network,
    check_evidence,
    load_network,
    parse_network,
    point_view,
    serialize_network,
    validate_network,
)
from beliefvar.dirichlet import DirichletCounts

from polytrees import random_binary_polytree, random_polytree


def doc(nodes, name="net"):
    return json.dumps({"name": name, "nodes": nodes})


def binary_node(node_id, parents, rows):
    return {
        "id": node_id,
        "alternatives": 2,
        "parents": parents,
        "cpt": [{"given": g, "counts": c} for g, c in rows],
    }


TWO_NODE = doc(
    [
        binary_node("E", [], [([], [0, 0])]),
        binary_node("F", ["E"], [([0], [0, 0]), ([1], [0, 0])]),
    ]
)


class TestParse:
    def test_minimal_two_node_polytree(self):
        net = parse_network(TWO_NODE)
        assert [n.id for n in net.nodes] == ["E", "F"]
        assert net.is_polytree
        assert net.node("F").parents == ("E",)

    def test_two_node_cycle_rejected(self):
        bad = doc(
            [
                binary_node("E", ["F"], [([0], [0, 0]), ([1], [0, 0])]),
                binary_node("F", ["E"], [([0], [0, 0]), ([1], [0, 0])]),
            ]
        )
        with pytest.raises(StructureError, match="cycle"):
            parse_network(bad)

    def test_table_configuration_at_a5_accepted(self):
        net = parse_network(
            doc(
                [
                    binary_node("E", [], [([], [5, 5])]),
                    binary_node("F", ["E"], [([0], [5, 5]), ([1], [5, 5])]),
                ]
            )
        )
        np.testing.assert_array_equal(net.node("E").cpt[0].a, [5.0, 5.0])

    def test_malformed_document(self):
        with pytest.raises(DocumentError):
            parse_network("not a network {")

    def test_duplicate_node_id(self):
        bad = doc([binary_node("E", [], [([], [0, 0])])] * 2)
        with pytest.raises(DocumentError, match="duplicate"):
            parse_network(bad)

    def test_unknown_parent(self):
        bad = doc([binary_node("F", ["E"], [([0], [0, 0]), ([1], [0, 0])])])
        with pytest.raises(DocumentError, match="unknown parent"):
            parse_network(bad)

    def test_missing_cpt_row(self):
        bad = doc(
            [
                binary_node("E", [], [([], [0, 0])]),
                binary_node("F", ["E"], [([0], [0, 0])]),
            ]
        )
        with pytest.raises(DocumentError):
            parse_network(bad)

    def test_wrong_counts_length(self):
        bad = doc([binary_node("E", [], [([], [0, 0, 0])])])
        with pytest.raises(DocumentError):
            parse_network(bad)

    def test_negative_count(self):
        bad = doc([binary_node("E", [], [([], [-1, 0])])])
        with pytest.raises(DocumentError):
            parse_network(bad)

    def test_non_finite_count(self):
        bad = doc([binary_node("E", [], [([], ["inf", 0])])])
        with pytest.raises(DocumentError):
            parse_network(bad)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DocumentError):
            load_network(str(tmp_path / "absent.json"))


class TestRoundTrip:
    def test_parse_serialize_parse(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            net = random_polytree(rng)
            again = parse_network(serialize_network(net))
            assert [n.id for n in again.nodes] == [n.id for n in net.nodes]
            for a, b in zip(again.nodes, net.nodes):
                assert a.parents == b.parents
                assert a.alternatives == b.alternatives
                np.testing.assert_array_equal(a.counts_matrix(), b.counts_matrix())


class TestValidate:
    def test_chain_is_polytree(self):
        net = parse_network(
            doc(
                [
                    binary_node("E", [], [([], [0, 0])]),
                    binary_node("F", ["E"], [([0], [0, 0]), ([1], [0, 0])]),
                    binary_node("G", ["F"], [([0], [0, 0]), ([1], [0, 0])]),
                ]
            )
        )
        report = validate_network(net)
        assert report.is_dag and report.is_polytree and report.errors == []

    def test_diamond_is_dag_not_polytree(self):
        rows2 = [([0], [0, 0]), ([1], [0, 0])]
        net = parse_network(
            doc(
                [
                    binary_node("A", [], [([], [0, 0])]),
                    binary_node("B", ["A"], rows2),
                    binary_node("C", ["A"], rows2),
                    binary_node(
                        "D",
                        ["B", "C"],
                        [([i, j], [0, 0]) for i in (0, 1) for j in (0, 1)],
                    ),
                ]
            )
        )
        report = validate_network(net)
        assert report.is_dag
        assert not report.is_polytree

    def test_generated_polytrees_stay_polytrees(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            net = random_binary_polytree(rng, n_nodes=20)
            assert validate_network(net).is_polytree

    def test_closing_an_undirected_cycle_flips_flag(self):
        # E->F, E->G is a polytree; adding F as a second parent of G closes a loop
        col = DirichletCounts([0.0, 0.0])
        base = [
            Node(id="E", alternatives=2, parents=(), cpt=(col,)),
            Node(id="F", alternatives=2, parents=("E",), cpt=(col, col)),
            Node(id="G", alternatives=2, parents=("E",), cpt=(col, col)),
        ]
        assert build_network("tree", base).is_polytree
        looped = base[:2] + [
            Node(id="G", alternatives=2, parents=("E", "F"), cpt=(col,) * 4)
        ]
        assert not build_network("loop", looped).is_polytree


class TestPointView:
    @pytest.mark.parametrize(
        "counts,expected",
        [([0, 0], (0.5, 0.5)), ([1, 3], (1 / 3, 2 / 3)), ([5, 5], (0.5, 0.5))],
    )
    def test_mean_rows(self, counts, expected):
        net = parse_network(doc([binary_node("E", [], [([], counts)])]))
        np.testing.assert_allclose(point_view(net).tables[0][0], expected, atol=1e-15)

    def test_rows_normalized_and_positive(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            net = random_polytree(rng)
            for table in point_view(net).tables:
                assert np.all(table > 0)
                np.testing.assert_allclose(table.sum(axis=1), 1.0, atol=1e-12)


class TestEvidence:
    def test_check_rejects_out_of_range(self):
        net = parse_network(TWO_NODE)
        with pytest.raises(ValueError, match="out of range"):
            check_evidence(net, Evidence({"F": 2}))

    def test_check_rejects_unknown_node(self):
        net = parse_network(TWO_NODE)
        with pytest.raises(KeyError):
            check_evidence(net, Evidence({"X": 0}))
