# Koopman 模型模块初始化文件

"""
Koopman 模型模块

全连接编码器/解码器、三种潜空间算子形式（dense, tridiagonal, jordan）、
潜空间推演与检查点读写。
"""

from .mlp import MLP, MlpConfig, ACTIVATIONS
from .operator_forms import (
    OperatorForm,
    FORMS,
    init_operator,
    operator_matrix,
    apply_operator,
    jordan_eigenvalues,
)
from .koopman_model import (
    KoopmanModel,
    Rollout,
    init_model,
    encode,
    decode,
    rollout,
    default_hidden_widths,
)
from .checkpoint import save_checkpoint, load_checkpoint, CHECKPOINT_MAGIC

__all__ = [
    'MLP',
    'MlpConfig',
    'ACTIVATIONS',
    'OperatorForm',
    'FORMS',
    'init_operator',
    'operator_matrix',
    'apply_operator',
    'jordan_eigenvalues',
    'KoopmanModel',
    'Rollout',
    'init_model',
    'encode',
    'decode',
    'rollout',
    'default_hidden_widths',
    'save_checkpoint',
    'load_checkpoint',
    'CHECKPOINT_MAGIC',
]
