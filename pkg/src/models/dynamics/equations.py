# 微分方程定义模块

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..utils.errors import DimensionError, DomainError

logger = logging.getLogger(__name__)

ODE_NAMES = ('shm', 'pendulum', 'lorenz', 'fluid_attractor')
PDE_NAMES = ('heat', 'wave', 'burgers', 'kdv')

# 经典 Lorenz 参数（仅在 classical_lorenz 开启时使用）
LORENZ_SIGMA = 10.0
LORENZ_RHO = 28.0
LORENZ_BETA = 8.0 / 3.0

# 稳定流体吸引子的增长率
FLUID_MU = 0.1


@dataclass(frozen=True)
class Equation:
    """
    微分方程描述

    ODE 的 state_dim 是一阶化后的状态维数，PDE 的 state_dim 是空间网格点数（含两个端点）
    """
    name: str
    kind: str
    state_dim: int
    boundary: str
    domain_length: float = 0.0
    options: Dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def is_ode(self) -> bool:
        return self.kind == 'ode'

    def grid(self) -> np.ndarray:
        """PDE 网格坐标，两个端点都包含在内"""
        if self.is_ode:
            raise DomainError(f"常微分方程没有空间网格: {self.name}")
        return np.linspace(0.0, self.domain_length, self.state_dim)

    @property
    def dx(self) -> float:
        return self.domain_length / (self.state_dim - 1)


def get_equation(name: str, config: Optional[Dict] = None) -> Equation:
    """
    根据名称构建方程

    参数:
        name: shm, pendulum, lorenz, fluid_attractor, heat, wave, burgers, kdv
        config: 配置信息，包含 grid_points, classical_lorenz, stable_fluid

    返回:
        Equation 实例
    """
    config = dict(config or {})
    config.setdefault('grid_points', 128)
    config.setdefault('classical_lorenz', False)
    config.setdefault('stable_fluid', False)

    if name in ('shm', 'pendulum'):
        return Equation(name, 'ode', 2, 'none')
    if name == 'lorenz':
        return Equation(name, 'ode', 3, 'none', options={'classical': bool(config['classical_lorenz'])})
    if name == 'fluid_attractor':
        return Equation(name, 'ode', 3, 'none', options={'stable': bool(config['stable_fluid'])})

    points = int(config['grid_points'])
    if name in PDE_NAMES and points < 5:
        raise DomainError(f"网格点数过少: {points}")
    if name in ('heat', 'wave', 'burgers'):
        return Equation(name, 'pde', points, 'dirichlet_zero', domain_length=1.0)
    if name == 'kdv':
        return Equation(name, 'pde', points, 'periodic', domain_length=2.0 * np.pi)

    raise DomainError(f"未知方程: {name}")


def ode_rhs(eq: Equation, s: np.ndarray) -> np.ndarray:
    """
    常微分方程右端项

    二阶方程按 (位置, 速度) 一阶化。s 可以带前导批次维度。

    参数:
        eq: 方程
        s: 状态，最后一维等于 eq.state_dim

    返回:
        状态的时间导数
    """
    if not eq.is_ode:
        raise DomainError(f"{eq.name} 不是常微分方程")
    s = np.asarray(s, dtype=np.float64)
    if s.shape[-1] != eq.state_dim:
        raise DimensionError(f"{eq.name} 状态维数不匹配", s.shape, (eq.state_dim,))

    if eq.name == 'shm':
        x, v = s[..., 0], s[..., 1]
        return np.stack([v, -x], axis=-1)

    if eq.name == 'pendulum':
        theta, omega = s[..., 0], s[..., 1]
        return np.stack([omega, -np.sin(theta)], axis=-1)

    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    if eq.name == 'lorenz':
        if eq.options.get('classical'):
            return np.stack([LORENZ_SIGMA * (y - x),
                             x * (LORENZ_RHO - z) - y,
                             x * y - LORENZ_BETA * z], axis=-1)
        return np.stack([y - x, x - x * z - y, x * y - z], axis=-1)

    if eq.name == 'fluid_attractor':
        if eq.options.get('stable'):
            return np.stack([FLUID_MU * x - y - x * z,
                             x + FLUID_MU * y - y * z,
                             -z + x * x + y * y], axis=-1)
        return np.stack([x - y + x * z, x + y + y * z, x * x + y * y + z], axis=-1)

    raise DomainError(f"未知方程: {eq.name}")
