"""Imitation dynamics on the simplex: revision protocols, the induced
mean dynamics, and numerical experiments on the survival of strictly
dominated strategies."""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .core import SimplexError, Trajectory, barycenter, validate_state
from .dynamics import (
    VectorField,
    asymptotic_share,
    bnn_field,
    build_field,
    mother_field,
    replicator_field,
    smith_field,
)
from .games import (
    GameError,
    HypnodiskParams,
    MatrixGame,
    PayoffFunction,
    add_twin,
    constant_game,
    hypnodisk_feeble_twin,
    hypnodisk_game,
    is_strictly_dominated,
    penalize,
    rps_feeble_twin,
)
from .integrate import IntegrationError, IntegratorConfig, integrate, integrate_controlled
from .protocols import (
    AdoptionRule,
    ProtocolError,
    RevisionProtocol,
    SelectionRule,
    selection_prob,
    selection_prob_mc,
    switch_rates,
)

__all__ = [
    "__version__",
    "KERNEL_BACKEND",
    "SimplexError",
    "Trajectory",
    "barycenter",
    "validate_state",
    "VectorField",
    "asymptotic_share",
    "bnn_field",
    "build_field",
    "mother_field",
    "replicator_field",
    "smith_field",
    "GameError",
    "HypnodiskParams",
    "MatrixGame",
    "PayoffFunction",
    "add_twin",
    "constant_game",
    "hypnodisk_feeble_twin",
    "hypnodisk_game",
    "is_strictly_dominated",
    "penalize",
    "rps_feeble_twin",
    "IntegrationError",
    "IntegratorConfig",
    "integrate",
    "integrate_controlled",
    "AdoptionRule",
    "ProtocolError",
    "RevisionProtocol",
    "SelectionRule",
    "selection_prob",
    "selection_prob_mc",
    "switch_rates",
]
