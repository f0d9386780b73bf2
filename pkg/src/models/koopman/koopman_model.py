# Koopman 自编码器模块

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..diffcore import Tensor, as_tensor, reshape
from ..utils.errors import ContractError, DimensionError, RolloutDivergenceError
from .mlp import MLP, MlpConfig
from .operator_forms import OperatorForm, apply_operator, init_operator

logger = logging.getLogger(__name__)


def default_hidden_widths(encoding_dim: int) -> List[int]:
    """默认两层隐藏层，宽度 max(64, 2·编码维数)"""
    width = max(64, 2 * encoding_dim)
    return [width, width]


class KoopmanModel:
    """
    Koopman 自编码器：编码器 E、潜空间线性算子 K、解码器 R
    """

    def __init__(self, encoder: MLP, operator: OperatorForm, decoder: MLP, seed: int = 0):
        if encoder.output_width != operator.dim or decoder.input_width != operator.dim:
            raise DimensionError("编码器输出、算子维数与解码器输入必须一致",
                                 (encoder.output_width, operator.dim), (decoder.input_width, operator.dim))
        if decoder.output_width != encoder.input_width:
            raise DimensionError("解码器输出宽度必须等于状态维数",
                                 (decoder.output_width,), (encoder.input_width,))
        self.encoder = encoder
        self.operator = operator
        self.decoder = decoder
        self.seed = seed
        self.logger = logging.getLogger(__name__)

    @property
    def state_dim(self) -> int:
        return self.encoder.input_width

    @property
    def encoding_dim(self) -> int:
        return self.operator.dim

    @property
    def activation(self) -> str:
        return self.encoder.config.activation

    @property
    def hidden_widths(self) -> List[int]:
        return list(self.encoder.config.widths[1:-1])

    def parameters(self) -> List[Tensor]:
        return self.encoder.parameters() + self.operator.parameters() + self.decoder.parameters()

    def named_parameters(self) -> List[Tuple[str, Tensor]]:
        return (self.encoder.named_parameters('encoder') + self.operator.named_parameters('operator')
                + self.decoder.named_parameters('decoder'))

    def state_dict(self) -> Dict[str, np.ndarray]:
        """参数快照（复制）"""
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, values: Dict[str, np.ndarray]) -> None:
        for name, param in self.named_parameters():
            if name not in values:
                raise ContractError(f"缺少参数: {name}")
            if values[name].shape != param.shape:
                raise DimensionError(f"参数 {name} 形状不一致", values[name].shape, param.shape)
            param.data[...] = values[name]

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None


@dataclass
class Rollout:
    """
    推演结果

    predictions[i-1] = R(K^i·E(s0))，i = 1..n；latents[i] = K^i·E(s0)，i = 0..n
    """
    predictions: List[Tensor]
    latents: List[Tensor]


def init_model(state_dim: int, encoding_dim: int, form: str = 'dense', seed: int = 0,
               config: Optional[Dict] = None) -> KoopmanModel:
    """
    初始化模型

    参数:
        state_dim: 物理状态维数
        encoding_dim: 潜空间维数
        form: dense, tridiagonal, jordan
        seed: 初始化种子（非负整数）
        config: 配置信息，包含 hidden_widths, activation

    返回:
        KoopmanModel，网络权重为 fan-in 缩放的均匀分布，算子为近单位矩阵
    """
    if state_dim < 1 or encoding_dim < 1:
        raise ContractError(f"维数必须为正: state_dim={state_dim}, encoding_dim={encoding_dim}")
    config = dict(config or {})
    config.setdefault('hidden_widths', default_hidden_widths(encoding_dim))
    config.setdefault('activation', 'tanh')

    # 编码器、算子、解码器各自使用独立的子种子
    sequence = np.random.SeedSequence(seed)
    enc_seed, op_seed, dec_seed = (int(s.generate_state(1)[0]) for s in sequence.spawn(3))

    hidden = [int(w) for w in config['hidden_widths']]
    encoder = MLP(MlpConfig(tuple([state_dim] + hidden + [encoding_dim]), config['activation'], enc_seed))
    decoder = MLP(MlpConfig(tuple([encoding_dim] + hidden[::-1] + [state_dim]), config['activation'], dec_seed))
    operator = init_operator(form, encoding_dim, np.random.default_rng(op_seed))
    return KoopmanModel(encoder, operator, decoder, seed=seed)


def _as_batch(s, width: int) -> Tensor:
    s = as_tensor(s)
    if s.ndim == 1:
        s = reshape(s, (1, s.size))
    if s.ndim != 2 or s.shape[1] != width:
        raise DimensionError("输入宽度不匹配", s.shape, (-1, width))
    return s


def encode(model: KoopmanModel, s) -> Tensor:
    """把物理状态批次 (B, state_dim) 编码到潜空间 (B, d)"""
    return model.encoder(_as_batch(s, model.state_dim))


def decode(model: KoopmanModel, e) -> Tensor:
    """把潜变量批次 (B, d) 解码为物理状态 (B, state_dim)"""
    return model.decoder(_as_batch(e, model.encoding_dim))


def rollout(model: KoopmanModel, s0, n: int) -> Rollout:
    """
    潜空间推演: s_i ≈ R(K^i·E(s0))，两次算子作用之间不重新编码、不加激活

    参数:
        model: 模型
        s0: 初始状态批次 (B, state_dim)
        n: 推演步数

    返回:
        Rollout，包含 n 个预测与 n+1 个潜变量迭代
    """
    if n < 1:
        raise ContractError(f"推演步数必须至少为 1: {n}")
    e = encode(model, s0)
    latents = [e]
    predictions = []
    for i in range(1, n + 1):
        e = apply_operator(model.operator, e)
        if not np.all(np.isfinite(e.data)):
            raise RolloutDivergenceError("潜空间推演出现非有限值", i)
        pred = decode(model, e)
        if not np.all(np.isfinite(pred.data)):
            raise RolloutDivergenceError("解码结果出现非有限值", i)
        latents.append(e)
        predictions.append(pred)
    return Rollout(predictions, latents)
