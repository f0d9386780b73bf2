# 全连接网络模块

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..diffcore import Tensor, matmul, relu, tanh
from ..utils.errors import ContractError, DimensionError

logger = logging.getLogger(__name__)

ACTIVATIONS = {
    'tanh': tanh,
    'relu': relu,
}


@dataclass(frozen=True)
class MlpConfig:
    """
    全连接网络结构

    widths 依次为输入宽度、各隐藏层宽度与输出宽度
    """
    widths: Tuple[int, ...]
    activation: str = 'tanh'
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'widths', tuple(int(w) for w in self.widths))
        if len(self.widths) < 3:
            raise ContractError(f"网络至少需要一个隐藏层: {self.widths}")
        if any(w < 1 for w in self.widths):
            raise ContractError(f"层宽必须为正: {self.widths}")
        if self.activation not in ACTIVATIONS:
            raise ContractError(f"不支持的激活函数: {self.activation}")


class MLP:
    """
    全连接网络，隐藏层后接激活函数，输出层为线性
    """

    def __init__(self, config: MlpConfig):
        self.config = config
        self.logger = logging.getLogger(__name__)

        # 权重 ~ U(−1/√fan_in, 1/√fan_in)，偏置为零
        rng = np.random.default_rng(config.seed)
        self.weights: List[Tensor] = []
        self.biases: List[Tensor] = []
        for fan_in, fan_out in zip(config.widths[:-1], config.widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(Tensor(rng.uniform(-bound, bound, size=(fan_in, fan_out)), requires_grad=True))
            self.biases.append(Tensor(np.zeros((1, fan_out)), requires_grad=True))

    @property
    def input_width(self) -> int:
        return self.config.widths[0]

    @property
    def output_width(self) -> int:
        return self.config.widths[-1]

    def parameters(self) -> List[Tensor]:
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def named_parameters(self, prefix: str) -> List[Tuple[str, Tensor]]:
        named = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            named.append((f"{prefix}.W{i}", w))
            named.append((f"{prefix}.b{i}", b))
        return named

    def forward(self, x: Tensor) -> Tensor:
        """
        前向传播

        参数:
            x: (批次, 输入宽度) 张量

        返回:
            (批次, 输出宽度) 张量
        """
        if x.ndim != 2 or x.shape[1] != self.input_width:
            raise DimensionError("网络输入宽度不匹配", x.shape, (x.shape[0] if x.ndim else 1, self.input_width))

        # 偏置通过 ones(B,1)·b(1,n) 扩展到整个批次
        ones = Tensor(np.ones((x.shape[0], 1)))
        activation = ACTIVATIONS[self.config.activation]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = matmul(h, w) + matmul(ones, b)
            if i < last:
                h = activation(h)
        return h

    def __call__(self, x: Tensor) -> Tensor:
        return self.forward(x)

