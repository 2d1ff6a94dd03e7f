"""Belief-network data model, document format, and structural validation.

A network document is a single JSON object:

    {"name": "...", "nodes": [{"id": "...", "alternatives": 2,
                               "parents": ["..."],
                               "cpt": [{"given": [...], "counts": [...]}]}]}

Each node carries one Dirichlet count vector per parent configuration.
CPT rows are stored in lexicographic order over parent alternative indices
with the last-listed parent varying fastest; `given` lists the parent
alternatives in parent order and is [] for root nodes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import DirichletCounts, mean_vector

__all__ = [
    "DocumentError",
    "StructureError",
    "EvidenceImpossibleError",
    "Node",
    "Network",
    "Evidence",
    "ValidationReport",
    "PointParameters",
    "build_network",
    "parse_network",
    "serialize_network",
    "load_network",
    "validate_network",
    "point_view",
    "check_evidence",
]


class DocumentError(Exception):
    """Malformed document or I/O failure (CLI exit code 1)."""


class StructureError(Exception):
    """Structurally invalid network or method/structure mismatch (CLI exit code 2)."""

    def __init__(self, *diagnostics: str) -> None:
        super().__init__("; ".join(diagnostics))
        self.diagnostics = list(diagnostics)


class EvidenceImpossibleError(Exception):
    """Evidence has probability zero under the queried parameters (CLI exit code 3)."""


@dataclass(frozen=True)
class Node:
    id: str
    alternatives: int
    parents: tuple[str, ...]
    cpt: tuple[DirichletCounts, ...]

    def counts_matrix(self) -> np.ndarray:
        """Counts as a (configurations, alternatives) array."""
        return np.array([row.a for row in self.cpt])


@dataclass(frozen=True)
class Evidence:
    """Hard assignments: node id -> 0-based alternative index."""

    assignments: dict[str, int]

    def __len__(self) -> int:
        return len(self.assignments)

    def items(self):
        return self.assignments.items()


@dataclass(frozen=True)
class ValidationReport:
    is_dag: bool
    is_polytree: bool
    errors: list[str]


@dataclass(frozen=True)
class PointParameters:
    """One fully specified point-probability table per node, aligned with
    Network.nodes; each table is (configurations, alternatives) with rows
    summing to 1."""

    tables: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class Network:
    name: str
    nodes: tuple[Node, ...]
    index: dict[str, int] = field(repr=False)
    children: tuple[tuple[int, ...], ...] = field(repr=False)
    parent_indices: tuple[tuple[int, ...], ...] = field(repr=False)
    topological_order: tuple[int, ...] = field(repr=False)
    is_polytree: bool = field(repr=False)

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[self.index[node_id]]
        except KeyError:
            raise KeyError(f"unknown node id {node_id!r}") from None

    def config_count(self, i: int) -> int:
        out = 1
        for p in self.parent_indices[i]:
            out *= self.nodes[p].alternatives
        return out

    def config_index(self, i: int, parent_alts) -> int:
        """Row index for one parent configuration (last parent fastest)."""
        idx = 0
        for p, alt in zip(self.parent_indices[i], parent_alts):
            idx = idx * self.nodes[p].alternatives + alt
        return idx


def _build_network(name: str, nodes: list[Node]) -> Network:
    index: dict[str, int] = {}
    for n in nodes:
        if n.id in index:
            raise DocumentError(f"duplicate node id {n.id!r}")
        index[n.id] = len(index)

    parent_indices = []
    for n in nodes:
        rows = []
        for pid in n.parents:
            if pid not in index:
                raise DocumentError(f"node {n.id!r} references unknown parent {pid!r}")
            if pid == n.id:
                raise StructureError(f"cycle: node {n.id!r} is its own parent")
            rows.append(index[pid])
        parent_indices.append(tuple(rows))

    children: list[list[int]] = [[] for _ in nodes]
    for i, parents in enumerate(parent_indices):
        for p in parents:
            children[p].append(i)

    # Kahn's algorithm; leftovers indicate a cycle.
    indegree = [len(p) for p in parent_indices]
    queue = [i for i, d in enumerate(indegree) if d == 0]
    topo: list[int] = []
    while queue:
        i = queue.pop()
        topo.append(i)
        for c in children[i]:
            indegree[c] -= 1
            if indegree[c] == 0:
                queue.append(c)
    if len(topo) != len(nodes):
        cyclic = sorted(nodes[i].id for i, d in enumerate(indegree) if d > 0)
        raise StructureError(f"cycle involving nodes {', '.join(cyclic)}")

    # Polytree iff the undirected skeleton is acyclic (union-find).
    root = list(range(len(nodes)))

    def find(x: int) -> int:
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    is_polytree = True
    for i, parents in enumerate(parent_indices):
        for p in parents:
            a, b = find(i), find(p)
            if a == b:
                is_polytree = False
            root[a] = b

    return Network(
        name=name,
        nodes=tuple(nodes),
        index=index,
        children=tuple(tuple(c) for c in children),
        parent_indices=tuple(parent_indices),
        topological_order=tuple(topo),
        is_polytree=is_polytree,
    )


def build_network(name: str, nodes: list[Node]) -> Network:
    """Assemble a Network from Node objects, with the same structural checks
    as parsing (duplicate ids, unknown parents, cycles)."""
    return _build_network(name, nodes)


def _parse_node(obj: dict, alt_by_id: dict[str, int]) -> Node:
    node_id = obj.get("id")
    if not isinstance(node_id, str) or not node_id:
        raise DocumentError("node missing a nonempty string 'id'")
    alternatives = obj.get("alternatives")
    if not isinstance(alternatives, int) or alternatives < 2:
        raise DocumentError(f"node {node_id!r}: 'alternatives' must be an integer >= 2")
    parents = obj.get("parents", [])
    if not isinstance(parents, list) or not all(isinstance(p, str) for p in parents):
        raise DocumentError(f"node {node_id!r}: 'parents' must be a list of node ids")
    if len(set(parents)) != len(parents):
        raise DocumentError(f"node {node_id!r}: repeated parent")

    parent_alts = []
    for pid in parents:
        if pid not in alt_by_id:
            # Leave resolution errors to _build_network, which knows about
            # forward references; here we only need alternative counts.
            raise DocumentError(f"node {node_id!r} references unknown parent {pid!r}")
        parent_alts.append(alt_by_id[pid])

    n_configs = int(np.prod(parent_alts)) if parent_alts else 1
    rows_in = obj.get("cpt")
    if not isinstance(rows_in, list):
        raise DocumentError(f"node {node_id!r}: 'cpt' must be a list of rows")
    if len(rows_in) != n_configs:
        raise DocumentError(
            f"node {node_id!r}: expected {n_configs} CPT rows, found {len(rows_in)}"
        )

    rows: list[DirichletCounts | None] = [None] * n_configs
    for row in rows_in:
        if not isinstance(row, dict) or "given" not in row or "counts" not in row:
            raise DocumentError(f"node {node_id!r}: CPT rows need 'given' and 'counts'")
        given = row["given"]
        if not isinstance(given, list) or len(given) != len(parents):
            raise DocumentError(f"node {node_id!r}: 'given' must list one index per parent")
        idx = 0
        for alt, t in zip(given, parent_alts):
            if not isinstance(alt, int) or not 0 <= alt < t:
                raise DocumentError(f"node {node_id!r}: 'given' index {alt!r} out of range")
            idx = idx * t + alt
        if rows[idx] is not None:
            raise DocumentError(f"node {node_id!r}: duplicate CPT row for given={given}")
        counts = row["counts"]
        if not isinstance(counts, list) or len(counts) != alternatives:
            raise DocumentError(
                f"node {node_id!r}: 'counts' must have length {alternatives}"
            )
        try:
            rows[idx] = DirichletCounts(np.asarray(counts, dtype=float))
        except (TypeError, ValueError) as exc:
            raise DocumentError(f"node {node_id!r}: bad counts {counts!r}: {exc}") from exc
    missing = [i for i, r in enumerate(rows) if r is None]
    if missing:
        raise DocumentError(f"node {node_id!r}: missing CPT row(s) for {len(missing)} configuration(s)")
    return Node(id=node_id, alternatives=alternatives, parents=tuple(parents), cpt=tuple(rows))


def parse_network(document: str) -> Network:
    """Parse a network document; raises DocumentError on malformed input and
    StructureError on cycles."""
    try:
        obj = json.loads(document)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or not isinstance(obj.get("nodes"), list):
        raise DocumentError("document must be an object with a 'nodes' array")
    name = obj.get("name", "")
    if not isinstance(name, str):
        raise DocumentError("'name' must be a string")

    alt_by_id: dict[str, int] = {}
    for node_obj in obj["nodes"]:
        if isinstance(node_obj, dict) and isinstance(node_obj.get("id"), str):
            alt = node_obj.get("alternatives")
            if isinstance(alt, int):
                alt_by_id[node_obj["id"]] = alt
    nodes = [_parse_node(node_obj, alt_by_id) for node_obj in obj["nodes"]]
    return _build_network(name, nodes)


def serialize_network(net: Network) -> str:
    """Inverse of parse_network up to numeric formatting."""
    nodes = []
    for i, n in enumerate(net.nodes):
        rows = []
        shape = [net.nodes[p].alternatives for p in net.parent_indices[i]]
        for idx, row in enumerate(n.cpt):
            given = list(np.unravel_index(idx, shape)) if shape else []
            rows.append({"given": [int(g) for g in given], "counts": row.a.tolist()})
        nodes.append(
            {
                "id": n.id,
                "alternatives": n.alternatives,
                "parents": list(n.parents),
                "cpt": rows,
            }
        )
    return json.dumps({"name": net.name, "nodes": nodes}, indent=2)


def load_network(path: str) -> Network:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc
    return parse_network(text)


def validate_network(net: Network) -> ValidationReport:
    """Structural report for a constructed network.

    Construction already rejects cycles and malformed CPTs, so errors is
    empty here; the report carries the polytree flag used to gate the
    propagation methods.
    """
    return ValidationReport(is_dag=True, is_polytree=net.is_polytree, errors=[])


def point_view(net: Network) -> PointParameters:
    """Replace every CPT column by its Dirichlet mean vector."""
    tables = []
    for n in net.nodes:
        tables.append(np.array([mean_vector(row) for row in n.cpt]))
    return PointParameters(tables=tuple(tables))


def check_evidence(net: Network, w: Evidence) -> None:
    for node_id, alt in w.items():
        node = net.node(node_id)
        if not isinstance(alt, (int, np.integer)) or not 0 <= alt < node.alternatives:
            raise ValueError(
                f"evidence {node_id}={alt!r} out of range (alternatives={node.alternatives})"
            )
