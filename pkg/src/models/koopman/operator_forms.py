# Koopman 算子形式模块
#
# dense:       d×d 矩阵全部可学习
# tridiagonal: 主对角 a (d)，上对角 b (d−1)，下对角 c (d−1)，即 K[i,i]=a_i, K[i,i+1]=b_i, K[i+1,i]=c_i
# jordan:      2×2 块对角，第 i 块为 [[a_i, b_i], [−b_i, a_i]]，特征值 a_i ± b_i·i

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..diffcore import Tensor, concat, matmul, mul, reshape, scatter, take, transpose
from ..utils.errors import ContractError, DimensionError

logger = logging.getLogger(__name__)

FORMS = ('dense', 'tridiagonal', 'jordan')

# 近单位初始化的扰动尺度
INIT_NOISE = 0.01
JORDAN_MAX_ANGLE = 0.05


class OperatorForm:
    """
    潜空间线性算子，不含偏置
    """

    def __init__(self, variant: str, dim: int, params: Dict[str, Tensor]):
        if variant not in FORMS:
            raise ContractError(f"未知的算子形式: {variant}")
        if dim < 1:
            raise ContractError(f"编码维数必须为正: {dim}")
        if variant == 'jordan' and dim % 2 != 0:
            raise ContractError(f"Jordan 形式要求偶数维: {dim}")
        self.variant = variant
        self.dim = dim
        self.params = params
        for name, shape in self.param_shapes(variant, dim).items():
            if name not in params:
                raise ContractError(f"{variant} 算子缺少参数 {name}")
            if params[name].shape != shape:
                raise DimensionError(f"{variant} 算子参数 {name} 形状不一致", params[name].shape, shape)
        # 谱范数幂迭代的持久起始向量
        self.power_vector: Optional[np.ndarray] = None

    @staticmethod
    def param_shapes(variant: str, dim: int) -> Dict[str, Tuple[int, ...]]:
        if variant == 'dense':
            return {'K': (dim, dim)}
        if variant == 'tridiagonal':
            return {'a': (dim,), 'b': (dim - 1,), 'c': (dim - 1,)}
        return {'a': (dim // 2,), 'b': (dim // 2,)}

    @property
    def masked(self) -> bool:
        """tridiagonal 与 jordan 属于带掩码的结构化形式"""
        return self.variant != 'dense'

    def parameters(self) -> List[Tensor]:
        return [self.params[name] for name in self.param_shapes(self.variant, self.dim)]

    def named_parameters(self, prefix: str = 'operator') -> List[Tuple[str, Tensor]]:
        return [(f"{prefix}.{name}", self.params[name]) for name in self.param_shapes(self.variant, self.dim)]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def __repr__(self) -> str:
        return f"OperatorForm({self.variant}, d={self.dim})"


def init_operator(variant: str, dim: int, rng: np.random.Generator) -> OperatorForm:
    """
    近单位初始化

    dense: I + 0.01·N(0,1); tridiagonal: a = 1 + 0.01·N, b = c = 0.01·N;
    jordan: a_i = cos φ_i, b_i = sin φ_i, φ_i ~ U[−0.05, 0.05]
    """
    if variant == 'dense':
        params = {'K': np.eye(dim) + INIT_NOISE * rng.standard_normal((dim, dim))}
    elif variant == 'tridiagonal':
        params = {
            'a': 1.0 + INIT_NOISE * rng.standard_normal(dim),
            'b': INIT_NOISE * rng.standard_normal(dim - 1),
            'c': INIT_NOISE * rng.standard_normal(dim - 1),
        }
    elif variant == 'jordan':
        if dim % 2 != 0:
            raise ContractError(f"Jordan 形式要求偶数维: {dim}")
        phi = rng.uniform(-JORDAN_MAX_ANGLE, JORDAN_MAX_ANGLE, size=dim // 2)
        params = {'a': np.cos(phi), 'b': np.sin(phi)}
    else:
        raise ContractError(f"未知的算子形式: {variant}")
    return OperatorForm(variant, dim, {k: Tensor(v, requires_grad=True) for k, v in params.items()})


def _tridiagonal_layout(d: int) -> np.ndarray:
    """[a, b, c] 拼接后各元素在 d×d 矩阵中的展平位置"""
    i = np.arange(d)
    j = np.arange(d - 1)
    return np.concatenate([i * d + i, j * d + j + 1, (j + 1) * d + j])


def _jordan_layout(d: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """[a, b] 拼接后的源下标、目标展平位置与符号"""
    half = d // 2
    i = np.arange(half)
    r = 2 * i
    dst = np.concatenate([r * d + r, r * d + r + 1, (r + 1) * d + r, (r + 1) * d + r + 1])
    src = np.concatenate([i, half + i, half + i, i])
    signs = np.concatenate([np.ones(half), np.ones(half), -np.ones(half), np.ones(half)])
    return dst, src, signs


def operator_matrix(form: OperatorForm) -> Tensor:
    """
    把算子物化为 d×d 矩阵（可微），结构零点不依赖任何参数

    参数:
        form: 算子形式

    返回:
        d×d 张量
    """
    d = form.dim
    if form.variant == 'dense':
        return form.params['K']
    if form.variant == 'tridiagonal':
        flat = concat([form.params['a'], form.params['b'], form.params['c']])
        return scatter(flat, _tridiagonal_layout(d), (d, d))
    if d % 2 != 0:
        raise ContractError(f"Jordan 形式要求偶数维: {d}")
    flat = concat([form.params['a'], form.params['b']])
    dst, src, signs = _jordan_layout(d)
    return scatter(flat, dst, (d, d), src_indices=src, signs=signs)


def _tile_rows(vector: Tensor, rows: int) -> Tensor:
    """把长度 n 的向量复制成 (rows, n)"""
    return matmul(Tensor(np.ones((rows, 1))), reshape(vector, (1, vector.size)))


def apply_operator(form: OperatorForm, z: Tensor) -> Tensor:
    """
    对潜变量批次施加算子: 每一行 z 映射为 K·z

    tridiagonal 形式按带状结构计算，每个向量 O(d)，结果与稠密乘积一致

    参数:
        form: 算子形式
        z: (批次, d) 张量

    返回:
        (批次, d) 张量
    """
    d = form.dim
    if z.ndim != 2 or z.shape[1] != d:
        raise DimensionError("潜变量宽度与算子维数不匹配", z.shape, (d, d))
    if form.variant != 'tridiagonal':
        return matmul(z, transpose(operator_matrix(form)))

    rows = z.shape[0]
    out = mul(z, _tile_rows(form.params['a'], rows))
    if d == 1:
        return out
    zeros = Tensor(np.zeros((rows, 1)))
    upper = mul(take(z, np.arange(1, d), axis=1), _tile_rows(form.params['b'], rows))
    lower = mul(take(z, np.arange(0, d - 1), axis=1), _tile_rows(form.params['c'], rows))
    return out + concat([upper, zeros], axis=1) + concat([zeros, lower], axis=1)


def jordan_eigenvalues(form: OperatorForm) -> np.ndarray:
    """
    Jordan 形式的特征值 a_i ± b_i·i

    返回:
        长度 d 的复数数组，每块依次给出 a_i + b_i·i 与 a_i − b_i·i
    """
    if form.variant != 'jordan':
        raise ContractError(f"只有 Jordan 形式可以直接读出特征值, 当前为 {form.variant}")
    a = form.params['a'].data
    b = form.params['b'].data
    pairs = np.empty(form.dim, dtype=np.complex128)
    pairs[0::2] = a + 1j * b
    pairs[1::2] = a - 1j * b
    return pairs
