# 自动微分模块初始化文件

"""
自动微分模块

提供带反向模式自动微分的稠密张量、Adam 优化器与梯度裁剪，
是其余所有模块训练所依赖的计算底座。
"""

from .tensor import (
    Tensor,
    ComputationRecord,
    as_tensor,
    backward,
    matmul,
    add,
    sub,
    mul,
    scale,
    tanh,
    relu,
    square,
    cos,
    power,
    elementwise,
    reduce_sum,
    mean,
    reduce_max,
    sq_norm,
    reduction,
    transpose,
    reshape,
    take,
    scatter,
    concat,
)
from .optimizer import OptimizerState, AdamOptimizer, adam_step, clip_gradients, global_grad_norm
from .gradcheck import numerical_gradient, gradient_check

__all__ = [
    'Tensor',
    'ComputationRecord',
    'as_tensor',
    'backward',
    'matmul',
    'add',
    'sub',
    'mul',
    'scale',
    'tanh',
    'relu',
    'square',
    'cos',
    'power',
    'elementwise',
    'reduce_sum',
    'mean',
    'reduce_max',
    'sq_norm',
    'reduction',
    'transpose',
    'reshape',
    'take',
    'scatter',
    'concat',
    'OptimizerState',
    'AdamOptimizer',
    'adam_step',
    'clip_gradients',
    'global_grad_norm',
    'numerical_gradient',
    'gradient_check',
]
