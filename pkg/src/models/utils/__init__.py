# 工具模块初始化文件

"""
工具模块

提供异常层次结构与数据集/检查点共用的二进制容器读写。
"""

from .errors import (
    KoopmanLabError,
    DimensionError,
    ContractError,
    DomainError,
    ConfigurationError,
    IntegrationBlowupError,
    RolloutDivergenceError,
    DatasetIOError,
)
from .container import write_container, read_container

__all__ = [
    'KoopmanLabError',
    'DimensionError',
    'ContractError',
    'DomainError',
    'ConfigurationError',
    'IntegrationBlowupError',
    'RolloutDivergenceError',
    'DatasetIOError',
    'write_container',
    'read_container',
]
