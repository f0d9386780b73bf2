# 训练模块初始化文件

"""
训练模块

带种子的确定性训练循环与测试评估，训练历史可导出为 DataFrame。
"""

from .history import History, HistoryRecord, STATUS_OK, STATUS_DIVERGED
from .trainer import TrainConfig, Trainer, fit, evaluate

__all__ = [
    'History',
    'HistoryRecord',
    'STATUS_OK',
    'STATUS_DIVERGED',
    'TrainConfig',
    'Trainer',
    'fit',
    'evaluate',
]
