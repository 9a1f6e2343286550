from .gradcheck import grad_check, gradient_errors
from .network import (
    Activation,
    ForwardCache,
    LayerSpec,
    Mode,
    Network,
    backward,
    cross_entropy,
    default_architecture,
    forward,
    predict,
    predict_proba,
    softmax,
)
from .optim import AdamState, adam_step
from .serialization import (
    ModelFormatError,
    load_network,
    network_from_bytes,
    network_to_bytes,
    save_network,
)
from .training import TrainConfig, TrainHistory, evaluate_loss, train

__all__ = [
    "Activation",
    "AdamState",
    "ForwardCache",
    "LayerSpec",
    "Mode",
    "ModelFormatError",
    "Network",
    "TrainConfig",
    "TrainHistory",
    "adam_step",
    "backward",
    "cross_entropy",
    "default_architecture",
    "evaluate_loss",
    "forward",
    "grad_check",
    "gradient_errors",
    "load_network",
    "network_from_bytes",
    "network_to_bytes",
    "predict",
    "predict_proba",
    "save_network",
    "softmax",
    "train",
]
