# 偏微分方程求解模块
#
# 热方程、波动方程、Burgers 方程: 线方法，二阶中心差分（Burgers 对流项迎风），RK4 子步
# KdV 方程: Fourier 伪谱半离散，2/3 规则去混叠，RK4 子步

import logging
import math
from typing import Callable, Tuple

import numpy as np
from scipy import fft

from ..utils.errors import ContractError, DomainError, IntegrationBlowupError
from .equations import Equation
from .ode_solver import rk4_increment
from .trajectory import Trajectory

logger = logging.getLogger(__name__)

# 子步长相对稳定性上限的系数
HEAT_SUBSTEP_FACTOR = 0.4      # dt_sub ≤ 0.4·Δx²
WAVE_SUBSTEP_FACTOR = 0.9      # dt_sub ≤ 0.9·Δx
ADVECTION_CFL = 0.5            # dt_sub ≤ 0.5·Δx / max|u|
KDV_SUBSTEP_FACTOR = 0.08      # dt_sub ≤ 0.08·Δx³

BOUNDARY_TOLERANCE = 1e-12


def _laplacian(u: np.ndarray, dx: float) -> np.ndarray:
    out = np.zeros_like(u)
    out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dx * dx)
    return out


def _upwind_gradient(u: np.ndarray, dx: float) -> np.ndarray:
    out = np.zeros_like(u)
    backward_diff = (u[1:-1] - u[:-2]) / dx
    forward_diff = (u[2:] - u[1:-1]) / dx
    out[1:-1] = np.where(u[1:-1] > 0, backward_diff, forward_diff)
    return out


def _substeps(dt: float, limit: float) -> Tuple[int, float]:
    """把记录间隔 dt 切成不超过 limit 的等长子步"""
    n = max(1, int(math.ceil(dt / limit - 1e-12)))
    return n, dt / n


def _check_boundary(eq: Equation, u0: np.ndarray) -> np.ndarray:
    """校验初始函数满足边界条件，并把端点精确投影到边界值"""
    u = np.array(u0, dtype=np.float64)
    if u.shape != (eq.state_dim,):
        raise ContractError(f"{eq.name} 初始函数长度应为 {eq.state_dim}, 实际为 {u.shape}")
    scale = max(1.0, float(np.max(np.abs(u))))
    if eq.boundary == 'dirichlet_zero':
        if abs(u[0]) > BOUNDARY_TOLERANCE * scale or abs(u[-1]) > BOUNDARY_TOLERANCE * scale:
            raise ContractError(f"{eq.name} 初始函数不满足零 Dirichlet 边界: u(0)={u[0]}, u(L)={u[-1]}")
        u[0] = 0.0
        u[-1] = 0.0
    elif eq.boundary == 'periodic':
        if abs(u[0] - u[-1]) > BOUNDARY_TOLERANCE * scale:
            raise ContractError(f"{eq.name} 初始函数不满足周期边界: u(0)={u[0]}, u(L)={u[-1]}")
        u[-1] = u[0]
    return u


def _march(eq: Equation, state: np.ndarray, rhs: Callable, dt: float, n_steps: int,
           limit_fn: Callable[[np.ndarray], float], record: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """按记录间隔推进，每个间隔内按 limit_fn 给出的上限做 RK4 子步"""
    rows = [record(state)]
    for i in range(1, n_steps + 1):
        n_sub, h = _substeps(dt, limit_fn(state))
        for _ in range(n_sub):
            state = rk4_increment(rhs, state, h)
        if not np.all(np.isfinite(state)):
            logger.error(f"{eq.name} 在第 {i} 个记录步出现非有限值")
            raise IntegrationBlowupError(f"{eq.name} 求解出现非有限值", i)
        rows.append(record(state))
    return np.stack(rows)


def _solve_heat(eq: Equation, u0: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    dx = eq.dx
    limit = HEAT_SUBSTEP_FACTOR * dx * dx
    return _march(eq, u0, lambda u: _laplacian(u, dx), dt, n_steps, lambda u: limit, lambda u: u.copy())


def _solve_wave(eq: Equation, u0: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    # 状态为 (u, u_t) 拼接，初始速度为零
    dx = eq.dx
    n = eq.state_dim
    limit = WAVE_SUBSTEP_FACTOR * dx

    def rhs(w):
        return np.concatenate([w[n:], _laplacian(w[:n], dx)])

    state = np.concatenate([u0, np.zeros(n)])
    return _march(eq, state, rhs, dt, n_steps, lambda w: limit, lambda w: w[:n].copy())


def _solve_burgers(eq: Equation, u0: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    dx = eq.dx
    diffusion_limit = HEAT_SUBSTEP_FACTOR * dx * dx

    def rhs(u):
        return _laplacian(u, dx) - u * _upwind_gradient(u, dx)

    def limit(u):
        speed = float(np.max(np.abs(u)))
        if speed == 0.0:
            return diffusion_limit
        return min(diffusion_limit, ADVECTION_CFL * dx / speed)

    return _march(eq, u0, rhs, dt, n_steps, limit, lambda u: u.copy())


def _solve_kdv(eq: Equation, u0: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    # 网格最后一点与第一点重合，谱方法只使用前 N 个互异节点
    n = eq.state_dim - 1
    dx = eq.domain_length / n
    k = fft.rfftfreq(n, d=dx) * 2.0 * np.pi
    dealias = np.arange(k.size) <= n // 3
    ik = 1j * k
    ik3 = 1j * k ** 3

    def rhs(u_hat):
        u = fft.irfft(u_hat, n=n)
        return dealias * (3.0 * ik * fft.rfft(u * u)) + ik3 * u_hat

    def limit(u_hat):
        base = KDV_SUBSTEP_FACTOR * dx ** 3
        speed = 6.0 * float(np.max(np.abs(fft.irfft(u_hat, n=n))))
        if speed == 0.0:
            return base
        return min(base, ADVECTION_CFL * dx / speed)

    def record(u_hat):
        u = fft.irfft(u_hat, n=n)
        return np.append(u, u[0])

    u_hat = fft.rfft(u0[:n]) * dealias
    rows = _march(eq, u_hat, rhs, dt, n_steps, limit, record)
    rows[0] = u0
    return rows


_SOLVERS = {
    'heat': _solve_heat,
    'wave': _solve_wave,
    'burgers': _solve_burgers,
    'kdv': _solve_kdv,
}


def solve_pde(eq: Equation, u0: np.ndarray, dt: float, n_steps: int) -> Trajectory:
    """
    求解一维偏微分方程

    参数:
        eq: 方程（heat, wave, burgers, kdv）
        u0: 网格上的初始函数，须满足边界条件
        dt: 记录间隔，内部子步长按稳定性条件自动选取
        n_steps: 记录步数

    返回:
        每个记录时刻的网格函数组成的轨迹，边界条件在每一行都精确成立
    """
    if eq.name not in _SOLVERS:
        raise DomainError(f"未知偏微分方程: {eq.name}")
    if not dt > 0:
        raise ContractError(f"记录间隔必须为正: {dt}")
    if n_steps < 1:
        raise ContractError(f"记录步数必须为正: {n_steps}")

    u0 = _check_boundary(eq, u0)
    states = _SOLVERS[eq.name](eq, u0, dt, n_steps)
    return Trajectory(states, dt, eq.name)
