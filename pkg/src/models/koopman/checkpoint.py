# 模型检查点模块

import logging

from ..utils.container import read_container, write_container
from ..utils.errors import DatasetIOError
from .koopman_model import KoopmanModel, init_model

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b'KAECKPT1'
CHECKPOINT_VERSION = 1


def save_checkpoint(model: KoopmanModel, path: str) -> None:
    """
    保存模型

    头部记录维数、算子形式、激活函数、隐藏层宽度与种子，数据块按参数名依次存放
    """
    header = {
        'format_version': CHECKPOINT_VERSION,
        'state_dim': model.state_dim,
        'encoding_dim': model.encoding_dim,
        'form': model.operator.variant,
        'activation': model.activation,
        'hidden_widths': model.hidden_widths,
        'seed': model.seed,
    }
    write_container(path, CHECKPOINT_MAGIC, header, list(model.state_dict().items()))
    logger.info(f"模型检查点已保存: {path}")


def load_checkpoint(path: str) -> KoopmanModel:
    """读取 save_checkpoint 写出的模型"""
    header, blocks = read_container(path, CHECKPOINT_MAGIC)
    try:
        model = init_model(int(header['state_dim']), int(header['encoding_dim']), header['form'],
                           seed=int(header['seed']),
                           config={'hidden_widths': header['hidden_widths'], 'activation': header['activation']})
    except KeyError as e:
        raise DatasetIOError(f"检查点头部缺少字段 {e}", path) from e
    model.load_state_dict(blocks)
    logger.info(f"模型检查点已读取: {path}")
    return model
