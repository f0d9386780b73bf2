# 精度损失模块
#
# preds 为 n 个 (B, D) 预测张量，targets 为对应的 n 个 (B, D) 目标数组；
# 每一步的误差为批次内 ‖pred_i − v_i‖² 的均值

from typing import List, Sequence

import numpy as np

from ..diffcore import Tensor, as_tensor, concat, mean, reduce_max, reduce_sum, reshape, scale, square
from ..utils.errors import ContractError, DimensionError


def check_pairs(preds: Sequence[Tensor], targets: Sequence) -> List[Tensor]:
    """校验预测与目标成对且形状一致，返回目标张量列表"""
    if len(preds) < 1:
        raise ContractError("至少需要一个时间步")
    if len(preds) != len(targets):
        raise DimensionError("预测与目标的步数不一致", (len(preds),), (len(targets),))
    out = []
    for p, t in zip(preds, targets):
        t = as_tensor(t)
        if p.shape != t.shape:
            raise DimensionError("预测与目标形状不一致", p.shape, t.shape)
        out.append(t)
    return out


def _row_sq_errors(p: Tensor, t: Tensor) -> Tensor:
    """每个样本的平方误差 (B,)"""
    return reduce_sum(square(p - t), axis=1)


def step_errors(preds: Sequence[Tensor], targets: Sequence) -> List[Tensor]:
    """每个时间步的批次平均平方误差"""
    targets = check_pairs(preds, targets)
    return [mean(_row_sq_errors(p, t)) for p, t in zip(preds, targets)]


def _weighted_step_mean(errors: List[Tensor], weights: np.ndarray) -> Tensor:
    total = scale(errors[0], weights[0])
    for e, w in zip(errors[1:], weights[1:]):
        total = total + scale(e, w)
    return scale(total, 1.0 / len(errors))


def full_accuracy(preds: Sequence[Tensor], targets: Sequence) -> Tensor:
    """(1/n)·Σ_i ‖pred_i − v_i‖²，批次取均值；也是测试误差"""
    errors = step_errors(preds, targets)
    return _weighted_step_mean(errors, np.ones(len(errors)))


def discounted_accuracy(preds: Sequence[Tensor], targets: Sequence, discount: float) -> Tensor:
    """
    折扣精度损失 (1/n)·Σ_i λ^i·‖pred_i − v_i‖²，i = 1..n

    λ = 1 时与 full_accuracy 逐位相同
    """
    if not 0.0 < discount <= 1.0:
        raise ContractError(f"折扣因子必须位于 (0, 1]: {discount}")
    errors = step_errors(preds, targets)
    weights = float(discount) ** np.arange(1, len(errors) + 1)
    return _weighted_step_mean(errors, weights)


def max_accuracy(preds: Sequence[Tensor], targets: Sequence) -> Tensor:
    """每个样本取各步平方误差的最大值，再对批次取均值"""
    targets = check_pairs(preds, targets)
    columns = [reshape(_row_sq_errors(p, t), (p.shape[0], 1)) for p, t in zip(preds, targets)]
    return mean(reduce_max(concat(columns, axis=1), axis=1))

