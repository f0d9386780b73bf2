# 网格搜索模块初始化文件

"""
网格搜索模块

搜索空间枚举与约束、并行且可恢复的搜索执行、平均效果/最优组合/相对耗时分析，
以及算子形式对比预设。
"""

from .search_space import (
    Combination,
    SearchSpace,
    CONSTRAINTS,
    DIMENSIONS,
    REPORT_DIMENSIONS,
    EPOCH_BUDGETS,
    OPERATOR_STUDY_EPOCHS,
    register_constraint,
    enumerate_space,
    preset_space,
    operator_study_space,
    epoch_budget,
    mask_of,
)
from .search_runner import (
    RESULT_COLUMNS,
    CountingClock,
    RunSettings,
    RunResult,
    SearchRunner,
    run_combination,
    run_search,
    results_to_frame,
    write_results,
    load_results,
)
from .result_analyzer import (
    results_frame,
    mean_effect,
    top_k,
    mean_relative_times,
    direct_comparison,
    norm_trend_check,
    norm_trend_vote,
    operator_table,
    NORM_TREND_COLUMNS,
)
from .operator_study import operator_study, default_data_config, DEFAULT_DT

__all__ = [
    'Combination',
    'SearchSpace',
    'CONSTRAINTS',
    'DIMENSIONS',
    'REPORT_DIMENSIONS',
    'EPOCH_BUDGETS',
    'OPERATOR_STUDY_EPOCHS',
    'register_constraint',
    'enumerate_space',
    'preset_space',
    'operator_study_space',
    'epoch_budget',
    'mask_of',
    'RESULT_COLUMNS',
    'CountingClock',
    'RunSettings',
    'RunResult',
    'SearchRunner',
    'run_combination',
    'run_search',
    'results_to_frame',
    'write_results',
    'load_results',
    'results_frame',
    'mean_effect',
    'top_k',
    'mean_relative_times',
    'direct_comparison',
    'norm_trend_check',
    'norm_trend_vote',
    'operator_table',
    'NORM_TREND_COLUMNS',
    'operator_study',
    'default_data_config',
    'DEFAULT_DT',
]
