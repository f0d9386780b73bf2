# 测试公共配置

import os
import sys

import pytest

# 添加项目根目录到Python路径
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 训练规模较大的测试（数分钟）")


@pytest.fixture
def rng():
    """固定种子的随机数生成器"""
    import numpy as np
    return np.random.default_rng(20240601)
