# 算子形式对比模块

import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Union

from ..dynamics import Dataset, generate_dataset
from .search_runner import RunResult, RunSettings, run_search
from .search_space import OPERATOR_STUDY_EPOCHS, operator_study_space

logger = logging.getLogger(__name__)

# 各方程默认的记录步长
DEFAULT_DT = {
    'shm': 0.1,
    'pendulum': 0.1,
    'lorenz': 0.01,
    'fluid_attractor': 0.01,
    'heat': 1e-3,
    'wave': 1e-3,
    'burgers': 1e-3,
    'kdv': 1e-3,
}
DEFAULT_DATA = {'n_train': 200, 'n_test': 50, 'n_steps': 20}


def default_data_config(equation: str) -> Dict[str, object]:
    config = dict(DEFAULT_DATA)
    config['dt'] = DEFAULT_DT.get(equation, 0.01)
    return config


def operator_study(equation: str, seed: int, train: Optional[Dataset] = None, test: Optional[Dataset] = None,
                   settings: Optional[RunSettings] = None, encoding_dim: int = 32, workers: int = 1,
                   out_path: Optional[Union[str, Path]] = None, resume: bool = False) -> List[RunResult]:
    """
    运行算子形式对比：full 精度 + reconstruction，三种算子形式 × 全部算子损失（含 none），共 14 个组合

    参数:
        equation: 方程名称
        seed: 基础种子，同时用于生成缺省数据集
        train: 训练集，缺省时按默认数据配置生成
        test: 测试集
        settings: 共享训练设置，缺省为 200 轮
        encoding_dim: 编码维数（jordan 形式要求偶数）
        workers: 工作进程数
        out_path: 结果 CSV
        resume: 跳过已完成的组合

    返回:
        按组合顺序排列的 RunResult 列表
    """
    if train is None or test is None:
        data = default_data_config(equation)
        logger.info(f"生成算子对比数据集: {equation}, {data}")
        train = generate_dataset(equation, data['n_train'], data['n_steps'], data['dt'], seed, 'train')
        test = generate_dataset(equation, data['n_test'], data['n_steps'], data['dt'], seed, 'test')
    settings = replace(settings, seed=seed) if settings else RunSettings(epochs=OPERATOR_STUDY_EPOCHS, seed=seed)
    space = operator_study_space(equation, encoding_dim)
    return run_search(space, train, test, settings, workers, out_path, resume)
