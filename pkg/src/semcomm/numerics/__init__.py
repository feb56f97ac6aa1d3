from .module import Linear, Module, param
from .optim import Adam, OptimizerState, optimizer_step
from .tensor import (
    GradientTape,
    Tensor,
    activation,
    add,
    as_tensor,
    backward,
    div,
    exp,
    gelu,
    layer_norm,
    log,
    log_softmax,
    matmul,
    mean,
    mul,
    no_tape,
    relu,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    square,
    sub,
    take_rows,
    transpose,
    tsum,
)

__all__ = [
    "Adam",
    "GradientTape",
    "Linear",
    "Module",
    "OptimizerState",
    "Tensor",
    "activation",
    "add",
    "as_tensor",
    "backward",
    "div",
    "exp",
    "gelu",
    "layer_norm",
    "log",
    "log_softmax",
    "matmul",
    "mean",
    "mul",
    "no_tape",
    "optimizer_step",
    "param",
    "relu",
    "reshape",
    "sigmoid",
    "softmax",
    "sqrt",
    "square",
    "sub",
    "take_rows",
    "transpose",
    "tsum",
]
