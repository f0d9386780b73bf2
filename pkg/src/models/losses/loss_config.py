# 损失配置模块

from dataclasses import dataclass, field
from typing import Dict, Optional

from ..diffcore import Tensor
from ..utils.errors import ConfigurationError

ACCURACY_OPTIONS = ('full', 'max', 'discounted')
EMBEDDING_OPTIONS = ('none', 'reconstruction', 'consistency', 'metric')
OPERATOR_OPTIONS = ('none', 'norm', 'isometry', 'unitary', 'determinant')
AUXILIARY_OPTIONS = ('none', 'absolute_max', 'energy')
ISOMETRY_SOURCES = ('latent', 'encoded')

TERM_NAMES = ('accuracy', 'embedding', 'operator', 'auxiliary')


@dataclass
class LossConfig:
    """
    训练目标：精度项必选，编码项、算子项、辅助项可选，每项一个正权重
    """
    accuracy: str = 'full'
    embedding: str = 'none'
    operator: str = 'none'
    auxiliary: str = 'none'
    discount: float = 1.0
    weights: Dict[str, float] = field(default_factory=dict)
    isometry_source: str = 'latent'
    isometry_samples: int = 64
    power_iterations: int = 10

    def __post_init__(self):
        for name, value, options in (('accuracy', self.accuracy, ACCURACY_OPTIONS),
                                     ('embedding', self.embedding, EMBEDDING_OPTIONS),
                                     ('operator', self.operator, OPERATOR_OPTIONS),
                                     ('auxiliary', self.auxiliary, AUXILIARY_OPTIONS),
                                     ('isometry_source', self.isometry_source, ISOMETRY_SOURCES)):
            if value not in options:
                raise ConfigurationError(f"取值 {value!r} 不在 {options} 中", name)
        if not 0.0 < self.discount <= 1.0:
            raise ConfigurationError(f"折扣因子必须位于 (0, 1]: {self.discount}", 'lambda')
        for name, weight in self.weights.items():
            if name not in TERM_NAMES:
                raise ConfigurationError(f"未知的损失项 {name!r}", 'weights')
            if not weight > 0:
                raise ConfigurationError(f"{name} 的权重必须为正: {weight}", 'weights')
        if self.isometry_samples < 1:
            raise ConfigurationError(f"采样数必须为正: {self.isometry_samples}", 'isometry_samples')
        if self.power_iterations < 1:
            raise ConfigurationError(f"幂迭代次数必须为正: {self.power_iterations}", 'power_iterations')

    def weight(self, term: str) -> float:
        return float(self.weights.get(term, 1.0))

    def active_terms(self) -> Dict[str, str]:
        """启用的损失项及其选项，精度项始终在内"""
        terms = {'accuracy': self.accuracy}
        for name in ('embedding', 'operator', 'auxiliary'):
            option = getattr(self, name)
            if option != 'none':
                terms[name] = option
        return terms

    def validate(self, form: str, equation: Optional[str] = None) -> None:
        """
        检查损失组合与算子形式、方程是否兼容

        参数:
            form: 算子形式
            equation: 数据集方程名称，None 表示不检查
        """
        if self.operator == 'determinant' and form == 'dense':
            raise ConfigurationError("行列式损失只能用于 tridiagonal 或 jordan 形式", 'operator')
        if self.auxiliary == 'energy' and equation is not None and equation != 'pendulum':
            raise ConfigurationError(f"能量守恒损失只适用于单摆, 当前方程为 {equation}", 'auxiliary')


@dataclass
class LossBreakdown:
    """
    各损失项的值与加权总和，total = Σ weight·term
    """
    total: Tensor
    terms: Dict[str, Tensor]
    weights: Dict[str, float]

    def values(self) -> Dict[str, float]:
        out = {name: term.item() for name, term in self.terms.items()}
        out['total'] = self.total.item()
        return out
