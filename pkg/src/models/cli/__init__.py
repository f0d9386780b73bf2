# 命令行模块初始化文件

"""
命令行模块

TOML 实验配置的加载与校验，以及 generate-data, train, grid-search, report,
operator-study 五个子命令。
"""

from .config_loader import ExperimentConfig, DataConfig, ModelConfig, load_config, parse_config
from .commands import main, build_parser, write_manifest, TOOL_VERSION

__all__ = [
    'ExperimentConfig',
    'DataConfig',
    'ModelConfig',
    'load_config',
    'parse_config',
    'main',
    'build_parser',
    'write_manifest',
    'TOOL_VERSION',
]
