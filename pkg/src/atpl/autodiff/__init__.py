from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, finite_diff_check
from .optim import OptimizerState, optimizer_step
from .params import ParamStore
from .tensor import Graph, Tensor, apply_primitive, backward, constant

__all__ = [
    "Graph", "Tensor", "apply_primitive", "backward", "constant",
    "ParamStore", "OptimizerState", "optimizer_step",
    "GradCheckReport", "finite_diff_check", "load_checkpoint", "save_checkpoint",
]
