"""Feed-forward networks on layered DAGs, trained by backpropagation with adaptive momentum."""

from .activations import Activation, get as get_activation
from .gradients import GradientSet, backward, finite_difference_gradients, gradient_norm_sq
from .network import ForwardTrace, batch_error, forward
from .optimizer import OptimizerState, max_eta, momentum_coefficient, step
from .topology import DagTopology, sequential_counterpart, validate

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "DagTopology",
    "ForwardTrace",
    "GradientSet",
    "OptimizerState",
    "backward",
    "batch_error",
    "finite_difference_gradients",
    "forward",
    "get_activation",
    "gradient_norm_sq",
    "max_eta",
    "momentum_coefficient",
    "sequential_counterpart",
    "step",
    "validate",
]
