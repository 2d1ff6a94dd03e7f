"""Posterior probabilities and their variances in singly connected belief networks.

Network parameters (CPT columns and root priors) are Dirichlet-distributed;
this package computes the first and second moments of inferred posterior
probabilities under that parameter uncertainty, by closed-form moment message
passing, by Monte Carlo integration, and by a quadrature oracle for small
binary networks.
"""

from .model import (
    Evidence,
    Network,
    Node,
    ValidationReport,
    DocumentError,
    StructureError,
    build_network,
    parse_network,
    serialize_network,
    load_network,
    validate_network,
    point_view,
)
from .dirichlet import DirichletCounts
from .meanprop import PropagationState, EvidenceImpossibleError
from .apm import MomentState
from .mcim import SampleConfig, EstimateResult
from .oracle import QuadratureConfig, QuadratureResult

__version__ = "0.1.0"

__all__ = [
    "Evidence",
    "Network",
    "Node",
    "ValidationReport",
    "DocumentError",
    "StructureError",
    "EvidenceImpossibleError",
    "build_network",
    "parse_network",
    "serialize_network",
    "load_network",
    "validate_network",
    "point_view",
    "DirichletCounts",
    "PropagationState",
    "MomentState",
    "SampleConfig",
    "EstimateResult",
    "QuadratureConfig",
    "QuadratureResult",
    "__version__",
]
