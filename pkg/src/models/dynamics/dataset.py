# 数据集生成与读写模块

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional

import numpy as np

from ..utils.container import read_container, write_container
from ..utils.errors import ContractError, DatasetIOError
from .equations import Equation, get_equation
from .initial_conditions import sample_initial
from .ode_solver import solve_ode
from .pde_solver import solve_pde
from .trajectory import Dataset, Trajectory

logger = logging.getLogger(__name__)

DATASET_MAGIC = b'KAEDATA1'
DATASET_VERSION = 1

_SPLIT_CODES = {'train': 0, 'test': 1}


def trajectory_rng(seed: int, index: int, split: str) -> np.random.Generator:
    """第 index 条轨迹的随机数生成器，只依赖 (seed⊕index, 划分)"""
    return np.random.default_rng([seed ^ index, _SPLIT_CODES[split]])


def _generate_one(eq: Equation, index: int, n_steps: int, dt: float, seed: int, split: str,
                  config: Dict) -> np.ndarray:
    rng = trajectory_rng(seed, index, split)
    s0 = sample_initial(eq, rng, config)
    if eq.is_ode:
        traj = solve_ode(eq, s0, dt, n_steps, substeps=config['substeps'])
    else:
        traj = solve_pde(eq, s0, dt, n_steps)
    return traj.states


def _generate_chunk(args) -> List[np.ndarray]:
    eq, indices, n_steps, dt, seed, split, config = args
    return [_generate_one(eq, i, n_steps, dt, seed, split, config) for i in indices]


class DatasetGenerator:
    """
    数据集生成器：随机采样初始条件并用参考求解器积分
    """

    def __init__(self, config: Optional[Dict] = None):
        """
        初始化数据集生成器

        参数:
            config: 配置信息，包含 substeps, modes, ranges, workers, grid_points,
                    classical_lorenz, stable_fluid
        """
        self.config = config or {}
        self.logger = logging.getLogger(__name__)

        self.config.setdefault('substeps', 10)      # 常微分方程每个记录间隔的 RK4 子步数
        self.config.setdefault('modes', 8)          # 偏微分方程初始条件的级数项数
        self.config.setdefault('workers', 1)        # 并行进程数
        self.config.setdefault('grid_points', 128)
        self.config.setdefault('classical_lorenz', False)
        self.config.setdefault('stable_fluid', False)

    def equation(self, name: str) -> Equation:
        return get_equation(name, self.config)

    def generate(self, equation: str, n_traj: int, n_steps: int, dt: float, seed: int,
                 split: str = 'train') -> Dataset:
        """
        生成数据集

        参数:
            equation: 方程名称
            n_traj: 轨迹数
            n_steps: 每条轨迹的记录步数
            dt: 记录间隔
            seed: 生成种子（非负整数）
            split: train 或 test

        返回:
            Dataset
        """
        if n_traj < 1 or n_steps < 1:
            raise ContractError(f"轨迹数与步数必须为正: n_traj={n_traj}, n_steps={n_steps}")
        if not dt > 0:
            raise ContractError(f"记录间隔必须为正: {dt}")
        if seed < 0:
            raise ContractError(f"种子必须为非负整数: {seed}")
        if split not in _SPLIT_CODES:
            raise ContractError(f"未知的数据划分: {split}")

        eq = self.equation(equation)
        workers = max(1, int(self.config['workers']))
        solver_config = {'substeps': int(self.config['substeps']), 'modes': int(self.config['modes'])}
        if self.config.get('ranges'):
            solver_config['ranges'] = self.config['ranges']

        if eq.name == 'fluid_attractor' and not eq.options.get('stable') and n_steps * dt > 2.0:
            self.logger.warning(f"流体吸引子按原式积分, 时间跨度 {n_steps * dt} 超过 2, 可能发散")

        self.logger.info(f"开始生成数据集: {eq.name}, {split}, 轨迹数 {n_traj}, 步数 {n_steps}, dt {dt}")

        if workers == 1:
            states = _generate_chunk((eq, range(n_traj), n_steps, dt, seed, split, solver_config))
        else:
            chunks = [list(range(n_traj))[w::workers] for w in range(workers)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_generate_chunk,
                                      [(eq, c, n_steps, dt, seed, split, solver_config) for c in chunks]))
            states = [None] * n_traj
            for chunk, part in zip(chunks, parts):
                for i, s in zip(chunk, part):
                    states[i] = s

        trajectories = [Trajectory(s, dt, eq.name) for s in states]
        dataset = Dataset(trajectories, split, seed, equation=eq.name, boundary=eq.boundary,
                          options=dict(eq.options, grid_points=eq.state_dim if not eq.is_ode else 0))
        self.logger.info(f"数据集生成完成: {len(dataset)} 条轨迹, 每条 {n_steps + 1} 行")
        return dataset


def generate_dataset(equation: str, n_traj: int, n_steps: int, dt: float, seed: int,
                     split: str = 'train', config: Optional[Dict] = None) -> Dataset:
    """按方程名称生成数据集，参见 DatasetGenerator.generate"""
    return DatasetGenerator(config).generate(equation, n_traj, n_steps, dt, seed, split)


def save_dataset(dataset: Dataset, path: str) -> None:
    """
    保存数据集

    头部记录方程、dt、步数、状态维数、边界、种子、轨迹数与划分，
    数据块 'states' 形状为 (轨迹数, n_steps+1, state_dim)
    """
    header = {
        'format_version': DATASET_VERSION,
        'equation': dataset.equation,
        'dt': dataset.dt,
        'n_steps': dataset.n_steps,
        'state_dim': dataset.state_dim,
        'boundary': dataset.boundary,
        'seed': dataset.seed,
        'count': len(dataset),
        'split': dataset.split,
        'options': dataset.options,
    }
    write_container(path, DATASET_MAGIC, header, [('states', dataset.as_array())])
    logger.info(f"数据集已保存: {path}")


def load_dataset(path: str) -> Dataset:
    """读取 save_dataset 写出的数据集"""
    header, blocks = read_container(path, DATASET_MAGIC)
    try:
        states = blocks['states']
        dt = float(header['dt'])
        equation = header['equation']
        expected = (int(header['count']), int(header['n_steps']) + 1, int(header['state_dim']))
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetIOError(f"数据集头部不完整 ({e})", path) from e
    if states.shape != expected:
        raise DatasetIOError(f"数据块形状 {states.shape} 与头部 {expected} 不一致", path)

    trajectories = [Trajectory(s, dt, equation) for s in states]
    dataset = Dataset(trajectories, header['split'], int(header['seed']), equation=equation,
                      boundary=header.get('boundary', 'none'), options=header.get('options', {}))
    logger.info(f"数据集已读取: {path}, {len(dataset)} 条轨迹")
    return dataset
