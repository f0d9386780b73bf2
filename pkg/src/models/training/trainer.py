# 训练模块

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..diffcore import AdamOptimizer, backward
from ..dynamics import Dataset
from ..koopman import KoopmanModel, rollout
from ..losses import LossConfig, full_accuracy, total_loss
from ..utils.errors import ConfigurationError, DimensionError, RolloutDivergenceError
from .history import STATUS_DIVERGED, History, HistoryRecord

logger = logging.getLogger(__name__)

Clock = Callable[[], float]


@dataclass
class TrainConfig:
    """
    单次训练配置
    """
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    clip: Optional[float] = 1.0
    seed: int = 0
    loss: LossConfig = field(default_factory=LossConfig)
    eval_interval: int = 1

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigurationError(f"训练轮数不能为负: {self.epochs}", 'epochs')
        if self.batch_size < 1:
            raise ConfigurationError(f"批大小必须为正: {self.batch_size}", 'batch_size')
        if self.lr < 0:
            raise ConfigurationError(f"学习率不能为负: {self.lr}", 'lr')
        if self.clip is not None and not self.clip > 0:
            raise ConfigurationError(f"梯度裁剪阈值必须为正: {self.clip}", 'clip')
        if self.eval_interval < 1 or (self.epochs > 0 and self.eval_interval > self.epochs):
            raise ConfigurationError(f"评估间隔必须位于 [1, epochs]: {self.eval_interval}", 'eval_interval')
        if self.seed < 0:
            raise ConfigurationError(f"种子必须为非负整数: {self.seed}", 'seed')


def evaluate(model: KoopmanModel, test: Dataset) -> float:
    """
    测试误差：对测试集每条轨迹从初始状态推演全部步数，取 full_accuracy 的均值

    参数:
        model: 模型（不会被修改）
        test: 测试数据集

    返回:
        平均测试误差
    """
    data = test.as_array()
    if data.shape[2] != model.state_dim:
        raise DimensionError("测试集状态维数与模型不一致", data.shape, (-1, -1, model.state_dim))
    n = data.shape[1] - 1
    result = rollout(model, data[:, 0], n)
    return full_accuracy(result.predictions, [data[:, i] for i in range(1, n + 1)]).item()


class Trainer:
    """
    训练器：按轮次打乱轨迹、划分小批次、组合损失、裁剪梯度并执行 Adam 更新
    """

    def __init__(self, config: Optional[TrainConfig] = None, clock: Optional[Clock] = None):
        """
        初始化训练器

        参数:
            config: 训练配置
            clock: 返回秒数的单调时钟，默认 time.perf_counter
        """
        self.config = config or TrainConfig()
        self.clock = clock or time.perf_counter
        self.logger = logging.getLogger(__name__)

    def _batches(self, count: int, rng: np.random.Generator) -> List[np.ndarray]:
        order = rng.permutation(count)
        size = self.config.batch_size
        return [order[i:i + size] for i in range(0, count, size)]

    def _train_epoch(self, model: KoopmanModel, optimizer: AdamOptimizer, data: np.ndarray, epoch: int,
                     equation: Optional[str]) -> Dict[str, float]:
        """训练一轮，返回各损失项在本轮所有批次上的均值；出现非有限损失时抛出 RolloutDivergenceError"""
        cfg = self.config
        rng = np.random.default_rng([cfg.seed, epoch])
        sums: Dict[str, float] = {}
        batches = self._batches(data.shape[0], rng)
        for step, idx in enumerate(batches, start=1):
            optimizer.zero_grad()
            breakdown = total_loss(model, data[idx], cfg.loss, rng, equation)
            values = breakdown.values()
            if not np.isfinite(values['total']):
                raise RolloutDivergenceError("训练损失出现非有限值", step)
            backward(breakdown.total)
            optimizer.step()
            for name, value in values.items():
                sums[name] = sums.get(name, 0.0) + value
        return {name: value / len(batches) for name, value in sums.items()}

    def fit(self, model: KoopmanModel, train: Dataset, test: Dataset) -> Tuple[KoopmanModel, History]:
        """
        训练模型

        参数:
            model: 模型（原地更新）
            train: 训练集
            test: 测试集

        返回:
            (model, History)；推演发散时训练中止，History.status 为 diverged
        """
        cfg = self.config
        if train.state_dim != model.state_dim or test.state_dim != model.state_dim:
            raise DimensionError("数据集状态维数与模型不一致", (train.state_dim, test.state_dim), (model.state_dim,))
        equation = train.equation or None
        cfg.loss.validate(model.operator.variant, equation)

        history = History()
        if cfg.epochs == 0:
            return model, history

        optimizer = AdamOptimizer(model.parameters(), {'lr': cfg.lr, 'clip': cfg.clip})
        data = train.as_array()
        start = self.clock()
        self.logger.info(f"开始训练: {cfg.epochs} 轮, 训练轨迹 {len(train)}, 测试轨迹 {len(test)}, "
                         f"算子 {model.operator.variant}, 损失 {cfg.loss.active_terms()}")

        for epoch in range(1, cfg.epochs + 1):
            try:
                losses = self._train_epoch(model, optimizer, data, epoch, equation)
                history.epoch_losses.append(losses['total'])
                if epoch % cfg.eval_interval == 0 or epoch == cfg.epochs:
                    test_error = evaluate(model, test)
                    if not np.isfinite(test_error):
                        raise RolloutDivergenceError("测试误差出现非有限值", train.n_steps)
                    history.append(HistoryRecord(epoch, losses, test_error, self.clock() - start))
                    self.logger.info(f"第 {epoch} 轮: 训练损失 {losses['total']:.6g}, 测试误差 {test_error:.6g}")
            except (RolloutDivergenceError, FloatingPointError, OverflowError) as e:
                history.status = STATUS_DIVERGED
                history.diverged_epoch = epoch
                self.logger.warning(f"第 {epoch} 轮训练发散: {e}")
                break

        history.wall_time = self.clock() - start
        return model, history


def fit(model: KoopmanModel, train: Dataset, test: Dataset, cfg: Optional[TrainConfig] = None,
        clock: Optional[Clock] = None) -> Tuple[KoopmanModel, History]:
    """训练模型，参见 Trainer.fit"""
    return Trainer(cfg, clock).fit(model, train, test)
