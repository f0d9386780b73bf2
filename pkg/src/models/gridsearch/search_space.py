# 搜索空间模块

import itertools
import logging
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..dynamics.equations import ODE_NAMES, PDE_NAMES
from ..koopman import FORMS
from ..losses import ACCURACY_OPTIONS, AUXILIARY_OPTIONS, EMBEDDING_OPTIONS, OPERATOR_OPTIONS, LossConfig
from ..utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

# 选项维度，按枚举顺序排列
DIMENSIONS = ('encoding_dim', 'form', 'accuracy', 'lambda', 'embedding', 'operator', 'auxiliary')
# 报告中可分组的维度，mask 由算子形式派生
REPORT_DIMENSIONS = DIMENSIONS + ('mask',)

# 各方程网格搜索的默认评估轮数
EPOCH_BUDGETS = {
    'shm': 20,
    'pendulum': 40,
    'lorenz': 30,
    'heat': 20,
    'wave': 30,
    'burgers': 50,
}
DEFAULT_EPOCH_BUDGET = 30
OPERATOR_STUDY_EPOCHS = 200
DEFAULT_DISCOUNT = 0.95


def mask_of(form: str) -> str:
    """tridiagonal 与 jordan 记为 with，dense 记为 without"""
    return 'without' if form == 'dense' else 'with'


@dataclass(frozen=True)
class Combination:
    """
    一个选项组合，combo_id 为枚举序号
    """
    combo_id: int
    equation: str
    encoding_dim: int
    form: str
    accuracy: str
    discount: float
    embedding: str
    operator: str
    auxiliary: str

    @property
    def mask(self) -> str:
        return mask_of(self.form)

    def seed(self, base_seed: int) -> int:
        """组合种子 = 基础种子 ⊕ 组合序号"""
        return int(base_seed) ^ self.combo_id

    def loss_config(self, extras: Optional[Dict] = None) -> LossConfig:
        """
        构造损失配置

        参数:
            extras: weights, isometry_source, isometry_samples, power_iterations 等共享设置
        """
        return LossConfig(accuracy=self.accuracy, embedding=self.embedding, operator=self.operator,
                          auxiliary=self.auxiliary, discount=self.discount, **(extras or {}))

    def options(self) -> Dict[str, object]:
        return {
            'combo_id': self.combo_id,
            'equation': self.equation,
            'encoding_dim': self.encoding_dim,
            'form': self.form,
            'accuracy': self.accuracy,
            'embedding': self.embedding,
            'operator': self.operator,
            'auxiliary': self.auxiliary,
            'lambda': self.discount,
        }


# 约束注册表：谓词返回 True 表示组合保留
Constraint = Callable[[Dict[str, object]], bool]
CONSTRAINTS: Dict[str, Constraint] = {}


def register_constraint(name: str) -> Callable[[Constraint], Constraint]:
    def decorator(fn: Constraint) -> Constraint:
        if name in CONSTRAINTS:
            raise ConfigurationError(f"约束 {name} 已注册", 'constraints')
        CONSTRAINTS[name] = fn
        return fn
    return decorator


@register_constraint('determinant_requires_structure')
def _determinant_requires_structure(combo: Dict[str, object]) -> bool:
    return not (combo['operator'] == 'determinant' and combo['form'] == 'dense')


@register_constraint('none_only_dense')
def _none_only_dense(combo: Dict[str, object]) -> bool:
    # 不带算子损失的组合只与不带掩码的稠密算子搭配
    return combo['operator'] != 'none' or combo['form'] == 'dense'


@register_constraint('energy_requires_pendulum')
def _energy_requires_pendulum(combo: Dict[str, object]) -> bool:
    return combo['auxiliary'] != 'energy' or combo['equation'] == 'pendulum'


def _as_tuple(values, name: str) -> tuple:
    if isinstance(values, (str, int, float)):
        values = [values]
    values = tuple(values)
    if not values:
        raise ConfigurationError("选项列表不能为空", name)
    if len(set(values)) != len(values):
        raise ConfigurationError(f"选项列表有重复: {values}", name)
    return values


@dataclass
class SearchSpace:
    """
    网格搜索空间：各选项维度的笛卡尔积经约束过滤
    """
    equation: str
    encoding_dims: Sequence[int] = (16,)
    forms: Sequence[str] = ('dense', 'tridiagonal')
    accuracy: Sequence[str] = ('full',)
    discount_factors: Sequence[float] = (DEFAULT_DISCOUNT,)
    embedding: Sequence[str] = ('reconstruction',)
    operator: Sequence[str] = ('none',)
    auxiliary: Sequence[str] = ('none',)
    constraints: Sequence[str] = ('determinant_requires_structure',)

    def __post_init__(self):
        if self.equation not in ODE_NAMES + PDE_NAMES:
            raise ConfigurationError(f"未知方程 {self.equation!r}", 'equation')
        self.encoding_dims = _as_tuple(self.encoding_dims, 'encoding_dims')
        for dim in self.encoding_dims:
            if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
                raise ConfigurationError(f"编码维数必须为正整数: {dim!r}", 'encoding_dims')
        self.discount_factors = _as_tuple(self.discount_factors, 'discount_factors')
        for factor in self.discount_factors:
            if not 0.0 < float(factor) <= 1.0:
                raise ConfigurationError(f"折扣因子必须位于 (0, 1]: {factor}", 'discount_factors')
        for name, options in (('forms', FORMS), ('accuracy', ACCURACY_OPTIONS),
                              ('embedding', EMBEDDING_OPTIONS), ('operator', OPERATOR_OPTIONS),
                              ('auxiliary', AUXILIARY_OPTIONS)):
            values = _as_tuple(getattr(self, name), name)
            for value in values:
                if value not in options:
                    raise ConfigurationError(f"取值 {value!r} 不在 {options} 中", name)
            setattr(self, name, values)
        self.constraints = tuple(self.constraints)
        for name in self.constraints:
            if name not in CONSTRAINTS:
                raise ConfigurationError(f"未知约束 {name!r}, 可选 {sorted(CONSTRAINTS)}", 'constraints')
        if 'jordan' in self.forms:
            odd = [d for d in self.encoding_dims if d % 2]
            if odd:
                raise ConfigurationError(f"jordan 形式要求偶数编码维数: {odd}", 'encoding_dims')

    def _accuracy_levels(self) -> List[Tuple[str, float]]:
        levels = []
        for option in self.accuracy:
            if option == 'discounted':
                levels.extend((option, float(f)) for f in self.discount_factors)
            else:
                levels.append((option, 1.0))
        return levels

    def enumerate(self) -> List[Combination]:
        """
        按声明顺序枚举组合：encoding_dim, form, accuracy(λ), embedding, operator, auxiliary

        返回:
            满足全部约束的组合列表，combo_id 从 0 连续编号
        """
        checks = [CONSTRAINTS[name] for name in self.constraints]
        combinations = []
        product = itertools.product(self.encoding_dims, self.forms, self._accuracy_levels(),
                                    self.embedding, self.operator, self.auxiliary)
        for dim, form, (accuracy, discount), embedding, operator, auxiliary in product:
            fields = {'equation': self.equation, 'encoding_dim': dim, 'form': form, 'accuracy': accuracy,
                      'lambda': discount, 'embedding': embedding, 'operator': operator, 'auxiliary': auxiliary}
            if all(check(fields) for check in checks):
                combinations.append(Combination(len(combinations), self.equation, dim, form, accuracy,
                                                discount, embedding, operator, auxiliary))
        if not combinations:
            raise ConfigurationError("约束过滤后搜索空间为空", 'search')
        return combinations

    def to_dict(self) -> Dict[str, object]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def enumerate_space(space: SearchSpace) -> List[Combination]:
    """枚举搜索空间，参见 SearchSpace.enumerate"""
    return space.enumerate()


# 各方程大规模搜索的编码维数与辅助损失
_PRESET_GRIDS = {
    'shm': ((16, 32, 64), ('none',)),
    'pendulum': ((32, 64), ('none', 'energy')),
    'lorenz': ((32, 64), ('none',)),
    'heat': ((64, 128), ('none', 'absolute_max')),
    'wave': ((128, 256), ('none', 'absolute_max')),
    'burgers': ((512, 1024), ('none', 'absolute_max')),
}


def preset_space(equation: str) -> SearchSpace:
    """
    各方程的预设搜索空间

    精度项 × 编码项 × 算子项 × 掩码，行列式损失只与掩码搭配，无算子损失只与稠密形式搭配

    参数:
        equation: shm, pendulum, lorenz, heat, wave, burgers

    返回:
        SearchSpace
    """
    if equation not in _PRESET_GRIDS:
        raise ConfigurationError(f"方程 {equation!r} 没有预设搜索空间, 可选 {sorted(_PRESET_GRIDS)}", 'preset')
    dims, auxiliary = _PRESET_GRIDS[equation]
    return SearchSpace(
        equation=equation,
        encoding_dims=dims,
        forms=('dense', 'tridiagonal'),
        accuracy=ACCURACY_OPTIONS,
        discount_factors=(DEFAULT_DISCOUNT,),
        embedding=('reconstruction', 'consistency', 'metric'),
        operator=('isometry', 'norm', 'unitary', 'determinant', 'none'),
        auxiliary=auxiliary,
        constraints=('determinant_requires_structure', 'none_only_dense'),
    )


def operator_study_space(equation: str, encoding_dim: int = 32) -> SearchSpace:
    """
    算子形式对比：full 精度 + reconstruction，三种形式 × 全部算子损失（含 none），行列式不与 dense 搭配
    """
    return SearchSpace(
        equation=equation,
        encoding_dims=(encoding_dim,),
        forms=('dense', 'tridiagonal', 'jordan'),
        accuracy=('full',),
        embedding=('reconstruction',),
        operator=('none', 'isometry', 'norm', 'unitary', 'determinant'),
        auxiliary=('none',),
        constraints=('determinant_requires_structure',),
    )


def epoch_budget(equation: str) -> int:
    return EPOCH_BUDGETS.get(equation, DEFAULT_EPOCH_BUDGET)
