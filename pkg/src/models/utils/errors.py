# 异常定义模块

from typing import Optional


class KoopmanLabError(Exception):
    """
    平台所有异常的基类
    """


class DimensionError(KoopmanLabError, ValueError):
    """
    形状不匹配异常，消息中同时给出两个形状
    """

    def __init__(self, message: str, left_shape=None, right_shape=None):
        self.left_shape = tuple(left_shape) if left_shape is not None else None
        self.right_shape = tuple(right_shape) if right_shape is not None else None
        if left_shape is not None and right_shape is not None:
            message = f"{message}: {self.left_shape} 与 {self.right_shape}"
        super().__init__(message)


class ContractError(KoopmanLabError, ValueError):
    """
    前置条件被违反
    """


class DomainError(KoopmanLabError, ValueError):
    """
    输入超出定义域（未知方程、空张量归约等）
    """


class ConfigurationError(KoopmanLabError, ValueError):
    """
    配置错误，field 为出错的配置项名称
    """

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        self.message = message
        if field:
            message = f"[{field}] {message}"
        super().__init__(message)


class IntegrationBlowupError(KoopmanLabError, RuntimeError):
    """
    数值积分出现非有限值
    """

    def __init__(self, message: str, step_index: int):
        self.step_index = step_index
        super().__init__(f"{message} (步数: {step_index})")


class RolloutDivergenceError(KoopmanLabError, RuntimeError):
    """
    潜空间推演出现非有限值
    """

    def __init__(self, message: str, step_index: int):
        self.step_index = step_index
        super().__init__(f"{message} (步数: {step_index})")


class DatasetIOError(KoopmanLabError, OSError):
    """
    数据集或检查点文件读写失败
    """

    def __init__(self, message: str, path: str):
        self.path = str(path)
        super().__init__(f"{message}: {self.path}")
