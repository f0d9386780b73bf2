# 编码损失模块

import logging
from typing import Sequence

import numpy as np

from ..diffcore import Tensor, mean, reduce_sum, scale, square, take
from ..koopman import KoopmanModel, decode, encode
from ..utils.errors import ContractError, DimensionError

logger = logging.getLogger(__name__)


def _flatten_states(states: np.ndarray, state_dim: int) -> np.ndarray:
    """把 (B, T, D) 或 (M, D) 的状态展平成 (M, D)"""
    states = np.asarray(states, dtype=np.float64)
    if states.shape[-1] != state_dim:
        raise DimensionError("状态维数与模型不一致", states.shape, (state_dim,))
    return states.reshape(-1, state_dim)


def reconstruction_loss(model: KoopmanModel, states: np.ndarray) -> Tensor:
    """
    重构损失: 对批次中所有物理状态取 ‖R(E(v_i)) − v_i‖² 的均值

    参数:
        model: 模型
        states: (B, n+1, D) 轨迹批次或 (M, D) 状态集合
    """
    flat = _flatten_states(states, model.state_dim)
    recon = decode(model, encode(model, flat))
    return mean(reduce_sum(square(recon - flat), axis=1))


def consistency_loss(model: KoopmanModel, latents: Sequence[Tensor], states: np.ndarray) -> Tensor:
    """
    一致性损失: (1/n)·Σ_i ‖K^i·E(v_0) − E(v_i)‖²，批次取均值

    参数:
        model: 模型
        latents: 推演给出的潜变量迭代 [E(v_0), K·E(v_0), ..., K^n·E(v_0)]
        states: (B, n+1, D) 轨迹批次
    """
    states = np.asarray(states, dtype=np.float64)
    n = len(latents) - 1
    if n < 1:
        raise ContractError("一致性损失至少需要一个时间步")
    if states.ndim != 3 or states.shape[1] != n + 1:
        raise DimensionError("轨迹批次与潜变量迭代步数不一致", states.shape, (-1, n + 1, model.state_dim))

    total = None
    for i in range(1, n + 1):
        term = mean(reduce_sum(square(latents[i] - encode(model, states[:, i])), axis=1))
        total = term if total is None else total + term
    return scale(total, 1.0 / n)


def derangement(count: int, rng: np.random.Generator) -> np.ndarray:
    """随机错排: 沿一个随机循环把每个下标映射到另一个下标"""
    if count < 2:
        raise ContractError(f"错排至少需要两个元素: {count}")
    order = rng.permutation(count)
    partner = np.empty(count, dtype=np.int64)
    partner[order] = np.roll(order, -1)
    return partner


def metric_loss(model: KoopmanModel, states: np.ndarray, rng: np.random.Generator) -> Tensor:
    """
    度量损失: (1/n)·Σ | ‖E(v_i) − E(v'_i)‖² − ‖v_i − v'_i‖² |²

    v'_i 由批次内状态的随机错排给出，每次调用重新抽取

    参数:
        model: 模型
        states: (B, n+1, D) 轨迹批次或 (M, D) 状态集合，M ≥ 2
        rng: 随机数生成器
    """
    flat = _flatten_states(states, model.state_dim)
    partner = derangement(flat.shape[0], rng)
    physical = np.sum((flat - flat[partner]) ** 2, axis=1)
    encoded = encode(model, flat)
    latent = reduce_sum(square(encoded - take(encoded, partner, axis=0)), axis=1)
    return mean(square(latent - physical))
