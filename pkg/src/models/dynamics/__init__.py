# 动力系统模块初始化文件

"""
动力系统模块

定义四个常微分方程与四个偏微分方程，随机采样初始条件，
用参考求解器积分得到训练与测试用的轨迹数据集。
"""

from .equations import Equation, get_equation, ode_rhs, ODE_NAMES, PDE_NAMES
from .trajectory import Trajectory, Dataset
from .ode_solver import rk4_step, solve_ode
from .pde_solver import solve_pde
from .initial_conditions import sample_initial, DEFAULT_ODE_RANGES
from .dataset import (
    DatasetGenerator,
    generate_dataset,
    save_dataset,
    load_dataset,
    trajectory_rng,
    DATASET_MAGIC,
)

__all__ = [
    'Equation',
    'get_equation',
    'ode_rhs',
    'ODE_NAMES',
    'PDE_NAMES',
    'Trajectory',
    'Dataset',
    'rk4_step',
    'solve_ode',
    'solve_pde',
    'sample_initial',
    'DEFAULT_ODE_RANGES',
    'DatasetGenerator',
    'generate_dataset',
    'save_dataset',
    'load_dataset',
    'trajectory_rng',
    'DATASET_MAGIC',
]
