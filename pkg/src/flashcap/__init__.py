"""flashcap: simulation, rate estimation, and capacity search for a
multilevel flash read channel with intercell interference, plus a
numerical certification bench for the bounds the model satisfies."""

from .backend import available_backends, backend_name
from .channel import (
    Trajectory,
    initial_density,
    log_step_density,
    sample_step,
    sample_trajectory,
    step_density,
)
from .constants import ConstantsLedger, constants_ledger
from .forward import ForwardLattice, log_conditional_density, log_output_density
from .inputs import (
    BlockInput,
    IIDInput,
    InputModel,
    MarkovInput,
    ShiftedBlockInput,
    uniform_iid,
)
from .params import START, ChannelParams, Resumed, Start, validate_params
from .rates import RateEstimate, estimate_entropy_rates, rate_from_state

__version__ = "0.1.0"

__all__ = [
    "BlockInput",
    "ChannelParams",
    "ConstantsLedger",
    "ForwardLattice",
    "IIDInput",
    "InputModel",
    "MarkovInput",
    "RateEstimate",
    "Resumed",
    "START",
    "ShiftedBlockInput",
    "Start",
    "Trajectory",
    "available_backends",
    "backend_name",
    "constants_ledger",
    "estimate_entropy_rates",
    "initial_density",
    "log_conditional_density",
    "log_output_density",
    "log_step_density",
    "rate_from_state",
    "sample_step",
    "sample_trajectory",
    "step_density",
    "uniform_iid",
    "validate_params",
    "__version__",
]
