from .autograd import Tensor, no_grad
from .network import (
    BASELINE_HEAD,
    POLICY_HEAD,
    GradientError,
    LstmState,
    NetworkSpec,
    PolicyParams,
    baseline_forward,
    check_finite_grads,
    init_params,
    policy_forward,
    sample_action,
)
from .checkpoint import ModelFormatError, load_model, save_model
from .optim import Adam

__all__ = [
    "Adam",
    "BASELINE_HEAD",
    "GradientError",
    "LstmState",
    "ModelFormatError",
    "NetworkSpec",
    "POLICY_HEAD",
    "PolicyParams",
    "Tensor",
    "baseline_forward",
    "check_finite_grads",
    "init_params",
    "load_model",
    "no_grad",
    "policy_forward",
    "sample_action",
    "save_model",
]
