# 辅助损失模块

from typing import Sequence

from ..diffcore import Tensor, concat, cos, mean, reduce_max, scale, square, take
from ..utils.errors import ContractError, DimensionError
from .accuracy_loss import check_pairs


def absolute_max_loss(preds: Sequence[Tensor], targets: Sequence) -> Tensor:
    """
    绝对最大值损失: 每个样本在所有时间步与所有采样点上取平方误差的最大值，再对批次取均值

    状态为一维时与 max_accuracy 相同
    """
    targets = check_pairs(preds, targets)
    columns = [square(p - t) for p, t in zip(preds, targets)]
    return mean(reduce_max(concat(columns, axis=1), axis=1))


def pendulum_energy(states: Tensor) -> Tensor:
    """单摆能量 H(θ, θ̇) = ½θ̇² + (1 − cos θ)，states 为 (B, 2)"""
    if states.ndim != 2 or states.shape[1] != 2:
        raise DimensionError("单摆状态必须为 (批次, 2)", states.shape, (-1, 2))
    theta = take(states, 0, axis=1)
    omega = take(states, 1, axis=1)
    return scale(square(omega), 0.5) + (1.0 - cos(theta))


def energy_loss(states: Sequence[Tensor]) -> Tensor:
    """
    能量守恒损失: 对序列中每个状态取 (H(s_k) − H(s_0))² 的均值，批次取均值

    参数:
        states: 状态序列，第 0 个为参考状态（训练时为 R(E(v_0))），其后为各步预测
    """
    if len(states) < 1:
        raise ContractError("能量损失至少需要一个状态")
    reference = pendulum_energy(states[0])
    total = None
    for s in states:
        term = mean(square(pendulum_energy(s) - reference))
        total = term if total is None else total + term
    return scale(total, 1.0 / len(states))
