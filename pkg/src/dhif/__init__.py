"""Distributed hybrid information fusion for sensor-network state estimation."""

from dhif.errors import (
    DhifError,
    InfiniteUncertaintyError,
    InvalidInputError,
    NotIdentifiableError,
    PreconditionError,
)
from dhif.fusion import (
    Estimate,
    InformationPair,
    LinearSource,
    from_information,
    fuse_ci,
    fuse_uncorrelated,
    to_information,
)
from dhif.model import (
    NetworkGraph,
    ProcessModel,
    SensorModel,
    check_boundedness_condition,
    is_observable,
    measure,
    naive_set,
    propagate_state,
    strongly_connected_components,
)
from dhif.weights import (
    WeightProblem,
    WeightResult,
    brute_force_weights,
    fast_ci_weights,
    optimize_ci_weights,
)

__version__ = "0.1.0"

__all__ = [
    "DhifError",
    "Estimate",
    "InfiniteUncertaintyError",
    "InformationPair",
    "InvalidInputError",
    "LinearSource",
    "NetworkGraph",
    "NotIdentifiableError",
    "PreconditionError",
    "ProcessModel",
    "SensorModel",
    "WeightProblem",
    "WeightResult",
    "brute_force_weights",
    "check_boundedness_condition",
    "fast_ci_weights",
    "from_information",
    "fuse_ci",
    "fuse_uncorrelated",
    "is_observable",
    "measure",
    "naive_set",
    "optimize_ci_weights",
    "propagate_state",
    "strongly_connected_components",
    "to_information",
]
