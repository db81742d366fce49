from .autograd import Tensor, backward, no_grad, record_kinks
from .gradcheck import GradCheckReport, grad_check
from .layers import MlpSpec, init_attention, init_mlp, layer_norm, mlp_forward, multi_head_attention
from .optim import adamw_step, warmup_linear
from .params import ParameterStore

__all__ = [
    "GradCheckReport",
    "MlpSpec",
    "ParameterStore",
    "Tensor",
    "adamw_step",
    "backward",
    "grad_check",
    "init_attention",
    "init_mlp",
    "layer_norm",
    "mlp_forward",
    "multi_head_attention",
    "no_grad",
    "record_kinks",
    "warmup_linear",
]
