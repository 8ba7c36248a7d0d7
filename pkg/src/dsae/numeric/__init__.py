from .optim import (
    AdamState,
    LbfgsConfig,
    LbfgsResult,
    adam_step,
    elastic_net,
    grad_check,
    lbfgs_minimize,
    logsumexp,
)
from .rng import Rng

__all__ = [
    "AdamState",
    "LbfgsConfig",
    "LbfgsResult",
    "adam_step",
    "elastic_net",
    "grad_check",
    "lbfgs_minimize",
    "logsumexp",
    "Rng",
]
