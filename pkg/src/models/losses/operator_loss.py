# 算子损失模块

import logging
import math
import sys
from typing import List, Optional

import numpy as np

from ..diffcore import (
    Tensor,
    as_tensor,
    matmul,
    mean,
    mul,
    power,
    reduce_sum,
    scale,
    sq_norm,
    square,
    take,
    transpose,
)
from ..koopman import OperatorForm, apply_operator, operator_matrix
from ..utils.errors import ConfigurationError, ContractError, DimensionError

logger = logging.getLogger(__name__)

# 单次缩放的最大二进制位移
_MAX_SHIFT = 1000


def _start_vector(form: OperatorForm) -> np.ndarray:
    if form.power_vector is not None and form.power_vector.shape == (form.dim,):
        return form.power_vector
    v = np.random.default_rng(form.dim).standard_normal(form.dim)
    return v / np.linalg.norm(v)


def spectral_norm_squared(form: OperatorForm, iterations: int = 10) -> Tensor:
    """
    用幂迭代估计 ‖K‖²（最大奇异值的平方），对迭代过程可微

    起始向量保存在 form.power_vector 中，下次调用从上次的结果继续

    参数:
        form: 算子形式
        iterations: 幂迭代步数
    """
    if iterations < 1:
        raise ContractError(f"幂迭代次数必须为正: {iterations}")
    k = operator_matrix(form)
    kt = transpose(k)
    v = Tensor(_start_vector(form))
    for _ in range(iterations):
        w = matmul(kt, matmul(k, v))
        norm_sq = float(np.dot(w.data, w.data))
        if norm_sq == 0.0:
            # K 的零空间包含当前向量，谱范数估计为 0
            form.power_vector = None
            return scale(sq_norm(matmul(k, v)), 0.0)
        v = mul(w, power(sq_norm(w), -0.5))
    form.power_vector = v.data.copy()
    return sq_norm(matmul(k, v))


def norm_loss(form: OperatorForm, iterations: int = 10) -> Tensor:
    """范数损失 (‖K‖² − 1)²，‖K‖ 为谱范数"""
    return square(spectral_norm_squared(form, iterations) - 1.0)


def isometry_loss(form: OperatorForm, rng: Optional[np.random.Generator] = None, samples: int = 64,
                  latent: Optional[Tensor] = None) -> Tensor:
    """
    等距损失 (1/n)·Σ_i (‖K·z_i‖² − ‖z_i‖²)²

    参数:
        form: 算子形式
        rng: 随机数生成器，未给出 latent 时从 N(0, I_d) 抽取 samples 个潜向量
        samples: 采样数
        latent: 直接给出的潜向量批次 (n, d)，例如编码后的物理状态
    """
    if latent is None:
        if rng is None:
            raise ContractError("等距损失需要随机数生成器或显式潜向量")
        latent = Tensor(rng.standard_normal((samples, form.dim)))
    latent = as_tensor(latent)
    if latent.ndim != 2 or latent.shape[1] != form.dim:
        raise DimensionError("潜向量宽度与算子维数不匹配", latent.shape, (-1, form.dim))
    mapped = reduce_sum(square(apply_operator(form, latent)), axis=1)
    original = reduce_sum(square(latent), axis=1)
    return mean(square(mapped - original))


def unitary_loss(form: OperatorForm) -> Tensor:
    """酉损失 ‖K·Kᵀ − I‖²（Frobenius 范数）"""
    k = operator_matrix(form)
    return sq_norm(matmul(k, transpose(k)) - np.eye(form.dim))


def _scale_pow2(value: Tensor, exponent: int) -> Tensor:
    # 分段乘 2^exponent，中间值单调趋向结果，不会提前溢出
    while exponent != 0:
        step = max(-_MAX_SHIFT, min(exponent, _MAX_SHIFT))
        value = scale(value, math.ldexp(1.0, step))
        exponent -= step
    return value


def _renormalize(values: List[Tensor], exponent: int):
    """
    按末尾几项中绝对值最大者缩放到尾数 [0.5, 1)，所有项同步缩放，返回累计的二进制指数

    缩放因子为 2 的整数次幂，数值与梯度都没有舍入误差
    """
    _, shift = math.frexp(max(abs(v.item()) for v in values))
    if shift == 0:
        return values, exponent
    return [_scale_pow2(v, -shift) for v in values], exponent + shift


def _restore(value: Tensor, exponent: int) -> Tensor:
    """乘回 2^exponent；结果超出 float64 范围时返回同号的无穷"""
    mantissa, own = math.frexp(value.item())
    if mantissa == 0.0:
        return value
    if own + exponent > sys.float_info.max_exp:
        return scale(value, math.inf)
    return _scale_pow2(value, exponent)


def det_tridiagonal(a, b, c) -> Tensor:
    """
    三对角矩阵行列式的线性递推
    det(A_m) = a_m·det(A_{m−1}) − b_{m−1}·c_{m−1}·det(A_{m−2})

    递推过程携带一个二进制指数，每步把末两项重新缩放，避免中间结果上溢或下溢

    参数:
        a: 主对角 (d,)
        b: 上对角 (d−1,)
        c: 下对角 (d−1,)
    """
    a, b, c = as_tensor(a), as_tensor(b), as_tensor(c)
    d = a.size
    if d < 1 or b.size != d - 1 or c.size != d - 1:
        raise DimensionError("三对角参数长度应为 d, d−1, d−1", (a.size, b.size, c.size), (d, d - 1, d - 1))

    previous = Tensor(1.0)
    current = take(a, 0)
    exponent = 0
    (previous, current), exponent = _renormalize([previous, current], exponent)
    for m in range(1, d):
        nxt = take(a, m) * current - take(b, m - 1) * take(c, m - 1) * previous
        (previous, current), exponent = _renormalize([current, nxt], exponent)
    return _restore(current, exponent)


def det_jordan(a, b) -> Tensor:
    """
    2×2 块对角矩阵的行列式 Π_i (a_i² + b_i²)

    参数:
        a, b: 各块参数 (d/2,)
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError("Jordan 参数 a 与 b 形状必须一致", a.shape, b.shape)
    blocks = square(a) + square(b)
    product = take(blocks, 0)
    exponent = 0
    (product,), exponent = _renormalize([product], exponent)
    for i in range(1, a.size):
        (product,), exponent = _renormalize([product * take(blocks, i)], exponent)
    return _restore(product, exponent)


def operator_determinant(form: OperatorForm) -> Tensor:
    """按算子形式选择行列式算法；dense 形式不支持"""
    if form.variant == 'tridiagonal':
        return det_tridiagonal(form.params['a'], form.params['b'], form.params['c'])
    if form.variant == 'jordan':
        return det_jordan(form.params['a'], form.params['b'])
    raise ConfigurationError("dense 形式的行列式计算代价过高, 行列式损失只能用于 tridiagonal 或 jordan", 'operator')


def determinant_loss(form: OperatorForm) -> Tensor:
    """行列式损失 (det K − 1)²"""
    return square(operator_determinant(form) - 1.0)
