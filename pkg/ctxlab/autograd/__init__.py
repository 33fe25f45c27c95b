from .tensor import Tensor, as_tensor, concatenate, is_grad_enabled, no_grad, parameter, stack
from .optim import Adam, clip_grad_norm, cosine_lr, grad_norm
from .gradcheck import GradCheckResult, check_gradients, relative_error

__all__ = [
    "Tensor",
    "as_tensor",
    "concatenate",
    "is_grad_enabled",
    "no_grad",
    "parameter",
    "stack",
    "Adam",
    "clip_grad_norm",
    "cosine_lr",
    "grad_norm",
    "GradCheckResult",
    "check_gradients",
    "relative_error",
]
