"""Experiment families: the published tables and figure sweeps.

All experiments live on two network shapes. A star has a binary root E with n
children, every child instantiated to its first alternative; a chain hangs a
single descendant line off E and instantiates the leaf. Every CPT column of a
configuration carries the same counts (a, b). Tables report the posterior
second moment of E's first alternative; figure sweeps report its posterior
variance. Symmetric sweeps use b = a; the asymmetric sweeps keep the column
means at (0.2, 0.8) by scaling counts as (s, 4s+3), since
(s+1)/(5s+4) = 1/5 for every s.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

from .apm import MomentState
from .dirichlet import DirichletCounts, second_moment, variance as prior_variance
from .enumeration import BudgetExceededError
from .mcim import SampleConfig, estimate_second_moment, estimate_variance
from .model import Evidence, Network, Node, build_network
from .oracle import QuadratureConfig, oracle_variance, quadrature_second_moment

__all__ = [
    "A_VALUES",
    "TARGETS",
    "RunRecord",
    "ExperimentConfig",
    "star_network",
    "chain_network",
    "asymmetric_counts",
    "experiment_configs",
    "run_experiment",
]

A_VALUES = (0, 1, 2, 5, 10, 20)
TARGETS = ("table1", "table2", "table3", "fig1", "fig2", "fig3", "fig4")
ROOT = "E"
QUERY_ALT = 0


@dataclass(frozen=True)
class RunRecord:
    """One CSV row: a single method evaluated on a single configuration."""

    experiment: str
    param_a: float
    param_b: float
    n: int | None
    depth: int | None
    method: str
    value: float
    std_error: float
    wall_time_ms: float


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    a: float
    b: float
    n: int | None
    depth: int | None
    network: Network
    evidence: Evidence
    # tables report the posterior second moment, figures the variance
    statistic: str


def _column(a: float, b: float) -> DirichletCounts:
    return DirichletCounts([a, b])


def star_network(a: float, b: float, n_children: int) -> Network:
    """Binary root E with n_children binary children, all columns (a, b)."""
    col = _column(a, b)
    nodes = [Node(id=ROOT, alternatives=2, parents=(), cpt=(col,))]
    for k in range(n_children):
        nodes.append(
            Node(id=f"F{k + 1}", alternatives=2, parents=(ROOT,), cpt=(col, col))
        )
    return build_network(f"star-{n_children}", nodes)


def chain_network(a: float, b: float, depth: int) -> Network:
    """Binary chain E -> C1 -> ... -> C<depth>, all columns (a, b)."""
    col = _column(a, b)
    nodes = [Node(id=ROOT, alternatives=2, parents=(), cpt=(col,))]
    prev = ROOT
    for k in range(depth):
        nid = f"C{k + 1}"
        nodes.append(Node(id=nid, alternatives=2, parents=(prev,), cpt=(col, col)))
        prev = nid
    return build_network(f"chain-{depth}", nodes)


def chain_leaf(depth: int) -> str:
    return f"C{depth}"


def asymmetric_counts(s: float) -> tuple[float, float]:
    """Counts with means (0.2, 0.8) at certainty scale s."""
    return s, 4.0 * s + 3.0


def _star_config(experiment: str, a: float, b: float, n: int, statistic: str):
    net = star_network(a, b, n)
    w = Evidence({f"F{k + 1}": 0 for k in range(n)})
    return ExperimentConfig(experiment, a, b, n, None, net, w, statistic)


def _chain_config(experiment: str, a: float, b: float, depth: int, statistic: str):
    net = chain_network(a, b, depth)
    w = Evidence({chain_leaf(depth): 0})
    return ExperimentConfig(experiment, a, b, None, depth, net, w, statistic)


def experiment_configs(target: str) -> list[ExperimentConfig]:
    if target not in TARGETS:
        raise ValueError(f"unknown experiment target {target!r}")
    configs: list[ExperimentConfig] = []
    if target == "table1":
        for a in A_VALUES:
            configs.append(_star_config(target, a, a, 1, "second_moment"))
    elif target == "table2":
        for a in A_VALUES:
            configs.append(_star_config(target, a, a, 2, "second_moment"))
    elif target == "table3":
        for a in A_VALUES:
            configs.append(_chain_config(target, a, a, 2, "second_moment"))
    elif target in ("fig1", "fig2"):
        for s in A_VALUES:
            a, b = (s, s) if target == "fig1" else asymmetric_counts(s)
            for n in range(1, 7):
                configs.append(_star_config(target, a, b, n, "variance"))
    else:  # fig3, fig4
        for s in A_VALUES:
            a, b = (s, s) if target == "fig3" else asymmetric_counts(s)
            for depth in range(1, 7):
                configs.append(_chain_config(target, a, b, depth, "variance"))
    return configs


def _prior_value(cfg: ExperimentConfig) -> float:
    root = cfg.network.node(ROOT).cpt[0]
    if cfg.statistic == "second_moment":
        return second_moment(root, QUERY_ALT)
    return prior_variance(root, QUERY_ALT)


def _apm_value(cfg: ExperimentConfig) -> float:
    state = MomentState(cfg.network)
    for node_id, alt in cfg.evidence.items():
        state.assert_evidence(node_id, alt)
    if cfg.statistic == "second_moment":
        return state.second_moment_matrix(ROOT)[QUERY_ALT, QUERY_ALT]
    return state.variance(ROOT, QUERY_ALT).value


def _mcim_value(cfg: ExperimentConfig, samples: int, seed: int):
    sc = SampleConfig(sample_count=samples, seed=seed)
    if cfg.statistic == "second_moment":
        est = estimate_second_moment(cfg.network, cfg.evidence, ROOT, QUERY_ALT, sc)
    else:
        est = estimate_variance(cfg.network, cfg.evidence, ROOT, QUERY_ALT, sc)
    return est.value, est.std_error


def _oracle_value(cfg: ExperimentConfig, quad: QuadratureConfig):
    if cfg.statistic == "second_moment":
        res = quadrature_second_moment(cfg.network, cfg.evidence, ROOT, QUERY_ALT, quad)
    else:
        res = oracle_variance(cfg.network, cfg.evidence, ROOT, QUERY_ALT, quad)
    return res.value, res.error_estimate if res.method == "mcim" else 0.0


def run_experiment(
    target: str,
    samples: int = 1_000_000,
    seed: int = 0,
    quad: QuadratureConfig | None = None,
    methods: tuple[str, ...] = ("prior", "apm", "mcim", "oracle"),
) -> list[RunRecord]:
    """Run one target's sweep; one record per (configuration, method).

    Oracle rows are included only where the configuration fits the quadrature
    budgets; deterministic methods report std_error 0.
    """
    quad = quad or QuadratureConfig()
    records: list[RunRecord] = []

    def emit(cfg: ExperimentConfig, method: str, value: float, std_error: float, t0: float):
        records.append(
            RunRecord(
                experiment=cfg.experiment,
                param_a=cfg.a,
                param_b=cfg.b,
                n=cfg.n,
                depth=cfg.depth,
                method=method,
                value=value,
                std_error=std_error,
                wall_time_ms=(time.perf_counter() - t0) * 1000.0,
            )
        )

    for cfg in experiment_configs(target):
        if "prior" in methods:
            t0 = time.perf_counter()
            emit(cfg, "prior", _prior_value(cfg), 0.0, t0)
        if "apm" in methods:
            t0 = time.perf_counter()
            emit(cfg, "apm", _apm_value(cfg), 0.0, t0)
        if "mcim" in methods:
            t0 = time.perf_counter()
            value, se = _mcim_value(cfg, samples, seed)
            emit(cfg, "mcim", value, se, t0)
        if "oracle" in methods:
            t0 = time.perf_counter()
            try:
                value, se = _oracle_value(cfg, quad)
            except BudgetExceededError:
                continue
            emit(cfg, "oracle", value, se, t0)
    return records
