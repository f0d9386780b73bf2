# 训练历史模块

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

STATUS_OK = 'ok'
STATUS_DIVERGED = 'diverged'


@dataclass
class HistoryRecord:
    """
    一个评估点：轮次、训练损失分解（该轮各批次均值）、测试误差、累计墙钟时间
    """
    epoch: int
    train_loss: Dict[str, float]
    test_error: float
    wall_time: float


@dataclass
class History:
    """
    训练历史

    records 只在评估点追加，epoch_losses 记录每一轮的平均训练总损失
    """
    records: List[HistoryRecord] = field(default_factory=list)
    epoch_losses: List[float] = field(default_factory=list)
    status: str = STATUS_OK
    diverged_epoch: Optional[int] = None
    wall_time: float = 0.0

    def append(self, record: HistoryRecord) -> None:
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ValueError(f"评估轮次必须严格递增: {self.records[-1].epoch} -> {record.epoch}")
        self.records.append(record)

    @property
    def diverged(self) -> bool:
        return self.status == STATUS_DIVERGED

    @property
    def epochs(self) -> List[int]:
        return [r.epoch for r in self.records]

    @property
    def test_errors(self) -> List[float]:
        return [r.test_error for r in self.records]

    def final_error(self) -> float:
        if self.diverged or not self.records:
            return float('inf') if self.diverged else float('nan')
        return self.records[-1].test_error

    def error_at(self, epoch: int) -> float:
        """某个评估轮次的测试误差，发散后的轮次为 +∞"""
        for r in self.records:
            if r.epoch == epoch:
                return r.test_error
        if self.diverged:
            return float('inf')
        raise KeyError(f"没有第 {epoch} 轮的评估记录")

    def to_frame(self) -> pd.DataFrame:
        """每个评估点一行，列为 epoch, train_*, test_error, wall_time_s"""
        rows = []
        for r in self.records:
            row = {'epoch': r.epoch}
            row.update({f"train_{name}": value for name, value in r.train_loss.items()})
            row['test_error'] = r.test_error
            row['wall_time_s'] = r.wall_time
            rows.append(row)
        frame = pd.DataFrame(rows)
        if frame.empty:
            frame = pd.DataFrame(columns=['epoch', 'train_total', 'test_error', 'wall_time_s'])
        frame['status'] = self.status
        return frame

    def windowed_losses(self, window: int = 5) -> np.ndarray:
        """按 window 轮分组的平均训练损失"""
        losses = np.asarray(self.epoch_losses, dtype=np.float64)
        count = len(losses) // window
        return losses[:count * window].reshape(count, window).mean(axis=1)
