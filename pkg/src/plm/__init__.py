"""Constructive training of two-layer ReLU networks.

Instances are learned one at a time in order of increasing residual. Each
new instance is fitted by gradient tuning when possible and by appending
three hidden nodes that fit it exactly otherwise, after which redundant
hidden nodes are pruned. Every learned instance stays within the error
tolerance at the end of every stage.
"""

from .agdo import AgdoConfig, AgdoExit, acceptable, agdo_run
from .cramming import CramParams, cram, find_cram_params
from .data import (
    COPPER_SCHEMA,
    Dataset,
    LagSchema,
    MinMaxScaler,
    SynthSpec,
    build_lagged_features,
    denormalize_target,
    generate_synthetic,
    load_csv,
    normalize_target,
    random_split,
    save_csv,
    synthetic_teacher,
)
from .errors import (
    DegenerateInstanceError,
    InsufficientHistoryError,
    InvalidInputError,
    InvalidOperationError,
    InvalidStateError,
    ParseError,
    PLMError,
    SamplingFailureError,
)
from .network import (
    Batch,
    TwoLayerNet,
    add_hidden_nodes,
    forward,
    gradient,
    hidden_activations,
    loss_regularized,
    loss_trimmed_mse,
    remove_hidden_node,
    residual,
)
from .organizing import OrganizeConfig, organize, regularize, try_prune_node
from .selection import Mode, ResidualOrder, interpret, pick
from .trainer import PlmConfig, StageRecord, TrainReport, initialize, train

__version__ = "0.1.0"
