# 损失函数模块初始化文件

"""
损失函数模块

精度损失（full, max, discounted）、编码损失（reconstruction, consistency, metric）、
算子损失（norm, isometry, unitary, determinant）、辅助损失（absolute_max, energy），
以及按 LossConfig 组合训练目标的 total_loss。
"""

from .loss_config import (
    LossConfig,
    LossBreakdown,
    ACCURACY_OPTIONS,
    EMBEDDING_OPTIONS,
    OPERATOR_OPTIONS,
    AUXILIARY_OPTIONS,
    TERM_NAMES,
)
from .accuracy_loss import full_accuracy, max_accuracy, discounted_accuracy, step_errors
from .encoding_loss import reconstruction_loss, consistency_loss, metric_loss, derangement
from .operator_loss import (
    spectral_norm_squared,
    norm_loss,
    isometry_loss,
    unitary_loss,
    det_tridiagonal,
    det_jordan,
    operator_determinant,
    determinant_loss,
)
from .auxiliary_loss import absolute_max_loss, energy_loss, pendulum_energy
from .loss_combiner import total_loss

__all__ = [
    'LossConfig',
    'LossBreakdown',
    'ACCURACY_OPTIONS',
    'EMBEDDING_OPTIONS',
    'OPERATOR_OPTIONS',
    'AUXILIARY_OPTIONS',
    'TERM_NAMES',
    'full_accuracy',
    'max_accuracy',
    'discounted_accuracy',
    'step_errors',
    'reconstruction_loss',
    'consistency_loss',
    'metric_loss',
    'derangement',
    'spectral_norm_squared',
    'norm_loss',
    'isometry_loss',
    'unitary_loss',
    'det_tridiagonal',
    'det_jordan',
    'operator_determinant',
    'determinant_loss',
    'absolute_max_loss',
    'energy_loss',
    'pendulum_energy',
    'total_loss',
]
