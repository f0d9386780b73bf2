# 结果分析模块

import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..training import STATUS_DIVERGED
from ..utils.errors import ConfigurationError, ContractError, DomainError
from .search_runner import RESULT_COLUMNS, RunResult, results_to_frame
from .search_space import REPORT_DIMENSIONS, mask_of

logger = logging.getLogger(__name__)

Results = Union[pd.DataFrame, List[RunResult]]

TOP_K_COLUMNS = ['rank', 'combo_id', 'test_error', 'accuracy', 'lambda', 'embedding', 'operator', 'auxiliary',
                 'mask', 'form', 'encoding_dim', 'status']

# norm 趋势检查中与 norm 比较的算子损失
TREND_OPERATORS = ('isometry', 'unitary', 'determinant')
NORM_TREND_COLUMNS = ['epoch', 'norm', *TREND_OPERATORS, 'passed']


def results_frame(results: Results) -> pd.DataFrame:
    """
    统一为结果表，并添加由算子形式派生的 mask 列
    """
    if isinstance(results, pd.DataFrame):
        frame = results.copy()
    else:
        frame = results_to_frame(list(results))
    missing = [c for c in RESULT_COLUMNS if c not in frame.columns]
    if missing:
        raise ContractError(f"结果表缺少列 {missing}")
    if frame.empty:
        raise DomainError("结果表为空")
    frame['mask'] = frame['form'].map(mask_of)
    return frame


def _check_dimension(dimension: str) -> None:
    if dimension not in REPORT_DIMENSIONS:
        raise ConfigurationError(f"未知维度 {dimension!r}, 可选 {REPORT_DIMENSIONS}", 'dimension')


def _diverged_ids(frame: pd.DataFrame) -> set:
    return set(frame.loc[frame['status'] == STATUS_DIVERGED, 'combo_id'])


def mean_effect(results: Results, dimension: str) -> pd.DataFrame:
    """
    某个选项维度的平均效果曲线

    参数:
        results: 结果表或 RunResult 列表
        dimension: 选项维度，如 operator, accuracy, mask

    返回:
        DataFrame，列为 [dimension, epoch, mean_error, runs, diverged]；
        发散的运行不计入均值，diverged 为该水平下发散运行的数量
    """
    _check_dimension(dimension)
    frame = results_frame(results)
    diverged = _diverged_ids(frame)
    ok = frame[~frame['combo_id'].isin(diverged)]

    levels = sorted(frame[dimension].unique())
    epochs = sorted(frame['epoch'].unique())
    index = pd.MultiIndex.from_product([levels, epochs], names=[dimension, 'epoch'])
    grouped = ok.groupby([dimension, 'epoch'])
    table = pd.DataFrame(index=index)
    table['mean_error'] = grouped['test_error'].mean().reindex(index)
    table['runs'] = grouped['combo_id'].nunique().reindex(index, fill_value=0).astype(int)
    per_level = frame[frame['combo_id'].isin(diverged)].groupby(dimension)['combo_id'].nunique()
    table['diverged'] = [int(per_level.get(level, 0)) for level, _ in index]
    return table.reset_index()


def top_k(results: Results, epoch: int, k: int = 10) -> pd.DataFrame:
    """
    某个评估轮次误差最小的 k 个组合

    发散的运行排在最后，误差相同时按 combo_id 升序

    参数:
        results: 结果表或 RunResult 列表
        epoch: 评估轮次
        k: 组合数量，超过运行数时返回全部

    返回:
        DataFrame，列为 TOP_K_COLUMNS
    """
    if k < 1:
        raise ContractError(f"k 必须为正: {k}")
    frame = results_frame(results)
    at = frame[frame['epoch'] == epoch].copy()
    if at.empty:
        raise DomainError(f"没有第 {epoch} 轮的结果")
    at['_diverged'] = at['status'] == STATUS_DIVERGED
    at = at.sort_values(['_diverged', 'test_error', 'combo_id'], kind='mergesort').head(k)
    at['rank'] = np.arange(1, len(at) + 1)
    return at[TOP_K_COLUMNS].reset_index(drop=True)


def _run_table(frame: pd.DataFrame) -> pd.DataFrame:
    """每个运行一行，wall_time_s 为该运行的总耗时"""
    options = frame.groupby('combo_id').first()
    options['wall_time_s'] = frame.groupby('combo_id')['wall_time_s'].max()
    return options.reset_index()


def mean_relative_times(results: Results, dimensions: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    各选项水平的平均耗时除以全部运行的平均耗时

    参数:
        results: 结果表或 RunResult 列表
        dimensions: 参与统计的维度，默认全部

    返回:
        DataFrame，列为 [dimension, level, relative_time, runs]
    """
    runs = _run_table(results_frame(results))
    overall = runs['wall_time_s'].mean()
    if not overall > 0:
        raise DomainError(f"平均耗时必须为正: {overall}")
    rows = []
    for dimension in dimensions or REPORT_DIMENSIONS:
        _check_dimension(dimension)
        grouped = runs.groupby(dimension)['wall_time_s']
        for level, times in grouped:
            rows.append({'dimension': dimension, 'level': level,
                         'relative_time': times.mean() / overall, 'runs': len(times)})
    return pd.DataFrame(rows, columns=['dimension', 'level', 'relative_time', 'runs'])


def direct_comparison(results: Results, dimension: str, fixed: Dict[str, object]) -> pd.DataFrame:
    """
    直接对比：其余选项固定时，只改变一个维度的误差曲线

    参数:
        results: 结果表或 RunResult 列表
        dimension: 变化的维度
        fixed: 其余维度的固定取值，如 {'encoding_dim': 64, 'mask': 'with', 'operator': 'unitary'}

    返回:
        以 epoch 为索引、dimension 各水平为列的误差表
    """
    _check_dimension(dimension)
    if dimension in fixed:
        raise ConfigurationError(f"变化维度 {dimension} 不能同时固定", 'fixed')
    frame = results_frame(results)
    selected = frame
    for name, value in fixed.items():
        _check_dimension(name)
        selected = selected[selected[name] == value]
    if selected.empty:
        raise DomainError(f"没有满足固定条件的运行: {fixed}")
    counts = selected.groupby(dimension)['combo_id'].nunique()
    ambiguous = counts[counts > 1]
    if not ambiguous.empty:
        raise ConfigurationError(f"固定条件不足, 以下水平对应多个运行: {list(ambiguous.index)}", 'fixed')
    table = selected.pivot(index='epoch', columns=dimension, values='test_error')
    table.columns.name = dimension
    return table


def norm_trend_check(results: Results, epoch: int) -> Dict[str, object]:
    """
    比较 norm 损失与 isometry/unitary/determinant 在某轮次的平均效果

    只记录警告，不抛出异常

    返回:
        {'epoch', 'norm', 'others', 'passed'}；没有 norm 或其他算子损失时 passed 为 None
    """
    effect = mean_effect(results, 'operator')
    at = effect[effect['epoch'] == epoch].set_index('operator')['mean_error']
    others = {name: float(at[name]) for name in TREND_OPERATORS
              if name in at.index and np.isfinite(at[name])}
    norm = float(at['norm']) if 'norm' in at.index else float('nan')
    if not np.isfinite(norm) or not others:
        logger.warning(f"第 {epoch} 轮缺少 norm 或其他算子损失的结果, 无法检查趋势")
        return {'epoch': epoch, 'norm': norm, 'others': others, 'passed': None}
    passed = all(norm > value for value in others.values())
    if not passed:
        logger.warning(f"第 {epoch} 轮 norm 损失的平均误差 {norm:.6g} 不劣于其他算子损失 {others}")
    return {'epoch': epoch, 'norm': norm, 'others': others, 'passed': passed}


def norm_trend_vote(results_per_seed: Sequence[Results], epoch: int,
                    required: int = 2) -> Tuple[bool, pd.DataFrame]:
    """
    多个种子的 norm 趋势投票

    参数:
        results_per_seed: 每个种子一份结果
        epoch: 比较的轮次
        required: 需要成立的最少种子数

    返回:
        (是否至少 required 个种子成立, 每个种子一行的检查表)；不成立时记录警告
    """
    if required < 1:
        raise ContractError(f"required 必须为正: {required}")
    checks = [norm_trend_check(results, epoch) for results in results_per_seed]
    rows = [{'epoch': c['epoch'], 'norm': c['norm'],
             **{name: c['others'].get(name, np.nan) for name in TREND_OPERATORS},
             'passed': c['passed']} for c in checks]
    table = pd.DataFrame(rows, columns=NORM_TREND_COLUMNS)
    votes = sum(1 for check in checks if check['passed'])
    if votes < required:
        logger.warning(f"norm 趋势只在 {votes}/{len(checks)} 个种子中成立")
    return votes >= required, table


def operator_table(results: Results, epoch: Optional[int] = None) -> pd.DataFrame:
    """
    算子形式对比表，列为 error, operator form, operator loss，按枚举顺序排列

    参数:
        epoch: 取误差的轮次，默认每个运行的最后一个评估轮次
    """
    frame = results_frame(results)
    if epoch is None:
        rows = frame.sort_values(['combo_id', 'epoch']).groupby('combo_id').last()
    else:
        rows = frame[frame['epoch'] == epoch].set_index('combo_id')
        if rows.empty:
            raise DomainError(f"没有第 {epoch} 轮的结果")
    rows = rows.sort_index()
    return pd.DataFrame({'error': rows['test_error'].to_numpy(),
                         'operator form': rows['form'].to_numpy(),
                         'operator loss': rows['operator'].to_numpy()})
