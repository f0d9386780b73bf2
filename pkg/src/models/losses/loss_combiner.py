# 损失组合模块

import logging
from typing import Dict, Optional

import numpy as np

from ..diffcore import Tensor, scale
from ..koopman import KoopmanModel, Rollout, decode, encode, rollout
from ..utils.errors import DimensionError
from .accuracy_loss import discounted_accuracy, full_accuracy, max_accuracy
from .auxiliary_loss import absolute_max_loss, energy_loss
from .encoding_loss import consistency_loss, metric_loss, reconstruction_loss
from .loss_config import LossBreakdown, LossConfig
from .operator_loss import determinant_loss, isometry_loss, norm_loss, unitary_loss

logger = logging.getLogger(__name__)


def accuracy_term(config: LossConfig, preds, targets) -> Tensor:
    if config.accuracy == 'max':
        return max_accuracy(preds, targets)
    if config.accuracy == 'discounted':
        return discounted_accuracy(preds, targets, config.discount)
    return full_accuracy(preds, targets)


def embedding_term(config: LossConfig, model: KoopmanModel, result: Rollout, batch: np.ndarray,
                   rng: np.random.Generator) -> Tensor:
    if config.embedding == 'reconstruction':
        return reconstruction_loss(model, batch)
    if config.embedding == 'consistency':
        return consistency_loss(model, result.latents, batch)
    return metric_loss(model, batch, rng)


def operator_term(config: LossConfig, model: KoopmanModel, batch: np.ndarray,
                  rng: np.random.Generator) -> Tensor:
    form = model.operator
    if config.operator == 'norm':
        return norm_loss(form, config.power_iterations)
    if config.operator == 'isometry':
        if config.isometry_source == 'encoded':
            return isometry_loss(form, latent=encode(model, batch.reshape(-1, model.state_dim)))
        return isometry_loss(form, rng, samples=config.isometry_samples)
    if config.operator == 'unitary':
        return unitary_loss(form)
    return determinant_loss(form)


def auxiliary_term(config: LossConfig, model: KoopmanModel, result: Rollout, targets) -> Tensor:
    if config.auxiliary == 'absolute_max':
        return absolute_max_loss(result.predictions, targets)
    return energy_loss([decode(model, result.latents[0])] + list(result.predictions))


def total_loss(model: KoopmanModel, batch: np.ndarray, config: LossConfig,
               rng: Optional[np.random.Generator] = None, equation: Optional[str] = None) -> LossBreakdown:
    """
    按损失配置组合训练目标

    参数:
        model: 模型
        batch: (B, n+1, D) 轨迹批次，第 0 列为初始状态
        config: 损失配置
        rng: 度量损失与等距损失使用的随机数生成器
        equation: 数据集方程名称，用于检查能量损失的适用性

    返回:
        LossBreakdown，total = Σ weight·term
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 3 or batch.shape[2] != model.state_dim or batch.shape[1] < 2:
        raise DimensionError("轨迹批次形状应为 (B, n+1, state_dim)，n ≥ 1", batch.shape, (-1, -1, model.state_dim))
    config.validate(model.operator.variant, equation)
    rng = rng if rng is not None else np.random.default_rng(0)

    n = batch.shape[1] - 1
    result = rollout(model, batch[:, 0], n)
    targets = [batch[:, i] for i in range(1, n + 1)]

    terms: Dict[str, Tensor] = {'accuracy': accuracy_term(config, result.predictions, targets)}
    if config.embedding != 'none':
        terms['embedding'] = embedding_term(config, model, result, batch, rng)
    if config.operator != 'none':
        terms['operator'] = operator_term(config, model, batch, rng)
    if config.auxiliary != 'none':
        terms['auxiliary'] = auxiliary_term(config, model, result, targets)

    weights = {name: config.weight(name) for name in terms}
    total = None
    for name, term in terms.items():
        weighted = scale(term, weights[name])
        total = weighted if total is None else total + weighted
    return LossBreakdown(total, terms, weights)
