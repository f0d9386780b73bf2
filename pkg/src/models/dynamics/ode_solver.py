# 常微分方程求解模块

import logging
from typing import Callable, Union

import numpy as np

from ..utils.errors import ContractError, IntegrationBlowupError
from .equations import Equation, ode_rhs
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

RhsFn = Callable[[np.ndarray], np.ndarray]


def rk4_increment(f: RhsFn, s: np.ndarray, dt: float) -> np.ndarray:
    """经典四阶 Runge-Kutta 一步，不做有限性检查"""
    k1 = f(s)
    k2 = f(s + 0.5 * dt * k1)
    k3 = f(s + 0.5 * dt * k2)
    k4 = f(s + dt * k3)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(eq: Union[Equation, RhsFn], s: np.ndarray, dt: float, step_index: int = 0) -> np.ndarray:
    """
    经典四阶 Runge-Kutta 单步

    参数:
        eq: 方程，或直接给出右端函数 f(s)
        s: 当前状态
        dt: 步长
        step_index: 当前步编号，出现非有限值时写入异常

    返回:
        下一步状态
    """
    if not dt > 0:
        raise ContractError(f"步长必须为正: {dt}")
    f = (lambda state: ode_rhs(eq, state)) if isinstance(eq, Equation) else eq
    out = rk4_increment(f, np.asarray(s, dtype=np.float64), dt)
    if not np.all(np.isfinite(out)):
        raise IntegrationBlowupError("Runge-Kutta 积分出现非有限值", step_index)
    return out


def solve_ode(eq: Equation, s0: np.ndarray, dt: float, n_steps: int, substeps: int = 1) -> Trajectory:
    """
    按记录间隔 dt 积分常微分方程

    参数:
        eq: 方程
        s0: 初始状态
        dt: 记录间隔
        n_steps: 记录步数
        substeps: 每个记录间隔内的 RK4 子步数

    返回:
        n_steps+1 行的轨迹
    """
    if n_steps < 1 or substeps < 1:
        raise ContractError(f"步数必须为正: n_steps={n_steps}, substeps={substeps}")
    h = dt / substeps
    states = np.empty((n_steps + 1, eq.state_dim))
    states[0] = s0
    s = np.asarray(s0, dtype=np.float64)
    for i in range(1, n_steps + 1):
        for j in range(substeps):
            s = rk4_step(eq, s, h, step_index=(i - 1) * substeps + j + 1)
        states[i] = s
    return Trajectory(states, dt, eq.name)
