"""Monte Carlo integration of posterior moments under parameter uncertainty.

Full parameter vectors U_j are sampled from the network's Dirichlet
distributions, an exact point-parameter posterior is computed for every
sample, and moments are estimated by the self-normalized ratio

    E(P(f|W)^k) ~ sum_j P(f|W,U_j)^k P(W|U_j) / sum_j P(W|U_j),

with P(W) estimated from the same sample. Standard errors come from the
delta method applied to the ratio (exact zero-mean residuals, so only
second-order accumulator sums are needed).

Sampling is partitioned into fixed-size logical blocks; block b draws from
a generator seeded by (seed, b) and partial sums are combined in block
order, so results are bit-identical for a given (seed, sample_count)
regardless of how work is scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dirichlet
from .enumeration import batched_query
from .meanprop import PropagationState
from .model import (
    Evidence,
    EvidenceImpossibleError,
    Network,
    PointParameters,
    StructureError,
    check_evidence,
)

__all__ = [
    "SampleConfig",
    "EstimateResult",
    "MomentEstimates",
    "sample_parameters",
    "estimate_moments",
    "estimate_second_moment",
    "estimate_first_moment",
    "estimate_variance",
]

BLOCK_SIZE = 65536


@dataclass(frozen=True)
class SampleConfig:
    """Monte Carlo run configuration.

    inner_engine: "meanprop" (polytrees only), "enumeration", or "auto"
    (meanprop when the network is a polytree, enumeration otherwise).
    """

    sample_count: int
    seed: int = 0
    inner_engine: str = "auto"

    def __post_init__(self) -> None:
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.inner_engine not in ("auto", "meanprop", "enumeration"):
            raise ValueError(f"unknown inner engine {self.inner_engine!r}")


@dataclass(frozen=True)
class EstimateResult:
    value: float
    std_error: float
    sample_count: int
    weight_sum: float


def sample_parameters(net: Network, stream: np.random.Generator) -> PointParameters:
    """One sampled table per node, columns drawn in canonical node/row order."""
    tables = []
    for node in net.nodes:
        tables.append(np.stack([dirichlet.sample(row, stream) for row in node.cpt]))
    return PointParameters(tables=tuple(tables))


def _sample_block(net: Network, seed: int, block_index: int, size: int) -> list[np.ndarray]:
    gen = dirichlet.substream(seed, block_index)
    tables = []
    for node in net.nodes:
        rows = [dirichlet.sample_block(row, gen, size) for row in node.cpt]
        tables.append(np.stack(rows, axis=1))  # (size, configs, alternatives)
    return tables


def _resolve_engine(net: Network, cfg: SampleConfig) -> str:
    engine = cfg.inner_engine
    if engine == "auto":
        engine = "meanprop" if net.is_polytree else "enumeration"
    if engine == "meanprop" and not net.is_polytree:
        raise StructureError("singly connected network required for the meanprop engine")
    return engine


def _block_posteriors(
    net: Network, tables: list[np.ndarray], node: str, w: Evidence, engine: str
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample (posterior vector, evidence weight) for one block."""
    if engine == "meanprop":
        state = PropagationState(net, tables=tables, strict=False)
        for node_id, alt in w.items():
            state.assert_evidence(node_id, alt)
        return state.posterior_batch(node), state.weight
    return batched_query(net, tables, node, w)


class _Sums:
    """Accumulated cross-products for the delta-method standard errors."""

    __slots__ = ("n", "w", "z1", "z2", "ww", "z1z1", "z2z2", "z1w", "z2w", "z1z2")

    def __init__(self) -> None:
        self.n = 0
        self.w = self.z1 = self.z2 = 0.0
        self.ww = self.z1z1 = self.z2z2 = 0.0
        self.z1w = self.z2w = self.z1z2 = 0.0

    def add(self, p: np.ndarray, omega: np.ndarray) -> None:
        z1 = p * omega
        z2 = p * z1
        self.n += p.size
        self.w += float(omega.sum())
        self.z1 += float(z1.sum())
        self.z2 += float(z2.sum())
        self.ww += float(omega @ omega)
        self.z1z1 += float(z1 @ z1)
        self.z2z2 += float(z2 @ z2)
        self.z1w += float(z1 @ omega)
        self.z2w += float(z2 @ omega)
        self.z1z2 += float(z1 @ z2)


def _accumulate(net: Network, w: Evidence, node: str, alt: int, cfg: SampleConfig) -> _Sums:
    check_evidence(net, w)
    if node in w.assignments:
        raise ValueError(f"query node {node!r} is already instantiated")
    qnode = net.node(node)
    if not 0 <= alt < qnode.alternatives:
        raise IndexError(f"alternative {alt} out of range for node {node!r}")
    engine = _resolve_engine(net, cfg)
    sums = _Sums()
    block = 0
    remaining = cfg.sample_count
    while remaining > 0:
        size = min(BLOCK_SIZE, remaining)
        tables = _sample_block(net, cfg.seed, block, size)
        posterior, omega = _block_posteriors(net, tables, node, w, engine)
        sums.add(posterior[:, alt], omega)
        block += 1
        remaining -= size
    if sums.w <= 0.0:
        raise EvidenceImpossibleError("evidence weight is zero in every sample")
    return sums


def _ratio_se(sums: _Sums, c1: float, c2: float, c3: float) -> float:
    """Std error of (c1*Z2 + c2*Z1 + c3*W) averages divided by the mean weight.

    The residual r_j = c1*z2_j + c2*z1_j + c3*omega_j has exact zero sample
    mean for the estimators below, so only second-order sums enter.
    """
    rr = (
        c1 * c1 * sums.z2z2
        + c2 * c2 * sums.z1z1
        + c3 * c3 * sums.ww
        + 2.0 * c1 * c2 * sums.z1z2
        + 2.0 * c1 * c3 * sums.z2w
        + 2.0 * c2 * c3 * sums.z1w
    )
    rr = max(rr, 0.0)
    wbar = sums.w / sums.n
    return float(np.sqrt(rr) / (sums.n * wbar))


@dataclass(frozen=True)
class MomentEstimates:
    """First and second posterior moments plus variance from one sample pass."""

    first: EstimateResult
    second: EstimateResult
    variance: EstimateResult


def estimate_moments(
    net: Network, w: Evidence, node: str, alt: int, cfg: SampleConfig
) -> MomentEstimates:
    """All three estimates from a single set of samples."""
    sums = _accumulate(net, w, node, alt, cfg)
    m1 = sums.z1 / sums.w
    m2 = sums.z2 / sums.w

    def result(value: float, se: float) -> EstimateResult:
        return EstimateResult(
            value=value, std_error=se, sample_count=sums.n, weight_sum=sums.w
        )

    return MomentEstimates(
        first=result(m1, _ratio_se(sums, 0.0, 1.0, -m1)),
        second=result(m2, _ratio_se(sums, 1.0, 0.0, -m2)),
        variance=result(m2 - m1 * m1, _ratio_se(sums, 1.0, -2.0 * m1, 2.0 * m1 * m1 - m2)),
    )


def estimate_second_moment(
    net: Network, w: Evidence, node: str, alt: int, cfg: SampleConfig
) -> EstimateResult:
    """Ratio estimate of E(P(node=alt | W)^2) with its standard error."""
    return estimate_moments(net, w, node, alt, cfg).second


def estimate_first_moment(
    net: Network, w: Evidence, node: str, alt: int, cfg: SampleConfig
) -> EstimateResult:
    """Ratio estimate of E(P(node=alt | W)); equals the point posterior in
    expectation by multilinearity."""
    return estimate_moments(net, w, node, alt, cfg).first


def estimate_variance(
    net: Network, w: Evidence, node: str, alt: int, cfg: SampleConfig
) -> EstimateResult:
    """Estimate of E(P^2) - E(P)^2 with a delta-method standard error."""
    return estimate_moments(net, w, node, alt, cfg).variance
