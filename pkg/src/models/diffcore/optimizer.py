# 优化器模块

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..utils.errors import ContractError
from .tensor import Tensor

logger = logging.getLogger(__name__)

# 裁剪阈值的相对容差，保证裁剪后再次裁剪不改变任何数值
_CLIP_TOLERANCE = 1e-12


@dataclass
class OptimizerState:
    """
    Adam 优化器状态
    """
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moments: List[np.ndarray] = field(default_factory=list)
    second_moments: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.lr < 0:
            raise ContractError(f"学习率不能为负: {self.lr}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ContractError(f"矩衰减率必须位于 (0,1): beta1={self.beta1}, beta2={self.beta2}")
        if self.eps <= 0:
            raise ContractError(f"eps 必须为正: {self.eps}")

    def ensure_moments(self, params: List[Tensor]):
        """首次调用时按参数形状创建一阶、二阶矩"""
        if not self.first_moments:
            self.first_moments = [np.zeros_like(p.data) for p in params]
            self.second_moments = [np.zeros_like(p.data) for p in params]
            return
        if len(self.first_moments) != len(params):
            raise ContractError(f"参数数量 {len(params)} 与优化器状态 {len(self.first_moments)} 不一致")
        for m, p in zip(self.first_moments, params):
            if m.shape != p.shape:
                raise ContractError(f"优化器状态形状 {m.shape} 与参数形状 {p.shape} 不一致")


def global_grad_norm(params: List[Tensor]) -> float:
    """所有参数梯度拼接后的 L2 范数"""
    total = 0.0
    for p in params:
        if p.grad is None:
            raise ContractError(f"参数 {p} 没有梯度")
        total += float(np.sum(p.grad * p.grad))
    return float(np.sqrt(total))


def clip_gradients(params: List[Tensor], max_norm: float) -> float:
    """
    按全局 L2 范数裁剪梯度

    参数:
        params: 参数列表（梯度已计算）
        max_norm: 允许的最大全局范数

    返回:
        裁剪前的全局范数
    """
    if max_norm is None or max_norm <= 0:
        raise ContractError(f"max_norm 必须为正: {max_norm}")

    norm = global_grad_norm(params)
    if norm > max_norm * (1.0 + _CLIP_TOLERANCE):
        factor = max_norm / norm
        for p in params:
            p.grad = p.grad * factor
    return norm


def adam_step(state: OptimizerState, params: List[Tensor]) -> None:
    """
    执行一步带偏差修正的 Adam 更新，更新后梯度清零

    参数:
        state: 优化器状态
        params: 参数列表（梯度已计算）
    """
    for p in params:
        if p.grad is None:
            raise ContractError(f"参数 {p} 没有梯度, 无法更新")

    state.ensure_moments(params)
    state.step += 1
    bias1 = 1.0 - state.beta1 ** state.step
    bias2 = 1.0 - state.beta2 ** state.step

    for i, p in enumerate(params):
        g = p.grad
        m = state.first_moments[i]
        v = state.second_moments[i]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / bias1
        v_hat = v / bias2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        p.grad = np.zeros_like(p.data)


class AdamOptimizer:
    """
    Adam 优化器，封装参数列表、优化器状态与可选的梯度裁剪
    """

    def __init__(self, params: List[Tensor], config: Optional[Dict] = None):
        """
        初始化优化器

        参数:
            params: 需要优化的参数
            config: 配置信息，包含 lr, beta1, beta2, eps, clip
        """
        self.config = config or {}
        self.logger = logging.getLogger(__name__)

        self.config.setdefault('lr', 1e-3)
        self.config.setdefault('beta1', 0.9)
        self.config.setdefault('beta2', 0.999)
        self.config.setdefault('eps', 1e-8)
        self.config.setdefault('clip', 1.0)  # None 表示不裁剪

        self.params = list(params)
        self.state = OptimizerState(lr=self.config['lr'], beta1=self.config['beta1'],
                                    beta2=self.config['beta2'], eps=self.config['eps'])

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self) -> float:
        """
        裁剪（如已配置）并更新参数

        返回:
            裁剪前的全局梯度范数
        """
        clip = self.config['clip']
        if clip is not None:
            norm = clip_gradients(self.params, clip)
        else:
            norm = global_grad_norm(self.params)
        adam_step(self.state, self.params)
        return norm
