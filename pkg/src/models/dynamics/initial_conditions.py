# 初始条件采样模块

import logging
from typing import Dict, Optional

import numpy as np

from ..utils.errors import DomainError
from .equations import Equation

logger = logging.getLogger(__name__)

# 常微分方程初始条件的默认均匀分布范围，每个分量一个 (low, high)
DEFAULT_ODE_RANGES = {
    'shm': [(-1.0, 1.0), (-1.0, 1.0)],
    'pendulum': [(-2.5, 2.5), (0.0, 0.0)],   # 从静止释放，位于分界线以下
    'lorenz': [(-1.0, 1.0)] * 3,
    'fluid_attractor': [(-0.2, 0.2)] * 3,
}


def sample_initial(eq: Equation, rng: np.random.Generator, config: Optional[Dict] = None) -> np.ndarray:
    """
    随机生成初始条件

    常微分方程在给定范围内均匀采样；偏微分方程用随机截断 Fourier 级数:
    Dirichlet 边界为正弦级数，周期边界为完整 Fourier 级数，第 k 个系数 ~ N(0, 1/k²)

    参数:
        eq: 方程
        rng: 随机数生成器
        config: 配置信息，包含 ranges（覆盖默认范围）, modes（级数项数）

    返回:
        初始状态向量或网格函数
    """
    config = dict(config or {})
    config.setdefault('modes', 8)

    if eq.is_ode:
        ranges = config.get('ranges') or DEFAULT_ODE_RANGES.get(eq.name)
        if ranges is None:
            raise DomainError(f"未知方程: {eq.name}")
        low = np.array([r[0] for r in ranges], dtype=np.float64)
        high = np.array([r[1] for r in ranges], dtype=np.float64)
        return low + (high - low) * rng.random(eq.state_dim)

    x = eq.grid()
    length = eq.domain_length
    modes = np.arange(1, int(config['modes']) + 1)

    if eq.boundary == 'dirichlet_zero':
        coeffs = rng.normal(0.0, 1.0 / modes)
        u = np.sin(np.outer(x, modes) * np.pi / length) @ coeffs
        u[0] = 0.0
        u[-1] = 0.0
        return u

    if eq.boundary == 'periodic':
        c0 = rng.normal(0.0, 1.0)
        a = rng.normal(0.0, 1.0 / modes)
        b = rng.normal(0.0, 1.0 / modes)
        phase = np.outer(x, modes) * 2.0 * np.pi / length
        u = c0 + np.cos(phase) @ a + np.sin(phase) @ b
        u[-1] = u[0]
        return u

    raise DomainError(f"{eq.name} 的边界类型不支持采样: {eq.boundary}")
