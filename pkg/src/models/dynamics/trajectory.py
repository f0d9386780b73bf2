# 轨迹与数据集类型模块

from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..utils.errors import ContractError, DimensionError

SPLITS = ('train', 'test')


@dataclass
class Trajectory:
    """
    等时间间隔的状态序列，第 0 行为初始条件
    """
    states: np.ndarray
    dt: float
    equation: str

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        if self.states.ndim != 2:
            raise DimensionError("轨迹状态必须是二维矩阵", self.states.shape, (-1, -1))
        if self.dt <= 0:
            raise ContractError(f"时间步长必须为正: {self.dt}")
        if not np.all(np.isfinite(self.states)):
            raise ContractError(f"{self.equation} 轨迹包含非有限值")

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]


@dataclass
class Dataset:
    """
    同一方程、同一 dt 与步数的轨迹集合
    """
    trajectories: List[Trajectory]
    split: str
    seed: int
    equation: str = ''
    boundary: str = 'none'
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.trajectories:
            raise ContractError("数据集不能为空")
        if self.split not in SPLITS:
            raise ContractError(f"未知的数据划分: {self.split}")
        first = self.trajectories[0]
        if not self.equation:
            self.equation = first.equation
        for traj in self.trajectories[1:]:
            if traj.states.shape != first.states.shape:
                raise DimensionError("数据集中的轨迹形状不一致", first.states.shape, traj.states.shape)
            if traj.dt != first.dt or traj.equation != first.equation:
                raise ContractError("数据集中的轨迹必须来自同一方程且 dt 相同")

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def dt(self) -> float:
        return self.trajectories[0].dt

    @property
    def n_steps(self) -> int:
        return self.trajectories[0].n_steps

    @property
    def state_dim(self) -> int:
        return self.trajectories[0].state_dim

    def as_array(self) -> np.ndarray:
        """(轨迹数, n_steps+1, state_dim) 数组"""
        return np.stack([t.states for t in self.trajectories])
