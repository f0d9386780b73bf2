# 网格搜索执行模块

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd

from ..dynamics import Dataset
from ..koopman import init_model
from ..training import STATUS_DIVERGED, STATUS_OK, History, TrainConfig, fit
from ..utils.errors import ConfigurationError, DatasetIOError
from .search_space import Combination, SearchSpace

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ['combo_id', 'equation', 'encoding_dim', 'form', 'accuracy', 'embedding', 'operator',
                  'auxiliary', 'lambda', 'epoch', 'test_error', 'wall_time_s', 'status']
OPTION_COLUMNS = ['equation', 'encoding_dim', 'form', 'accuracy', 'embedding', 'operator', 'auxiliary', 'lambda']


class CountingClock:
    """
    每次调用前进 1 秒的计数时钟，结果文件因此与并行度无关
    """

    def __init__(self):
        self.ticks = 0

    def __call__(self) -> float:
        self.ticks += 1
        return float(self.ticks)


@dataclass
class RunSettings:
    """
    所有组合共享的训练与模型设置
    """
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    clip: Optional[float] = 1.0
    eval_interval: int = 1
    seed: int = 0
    hidden_widths: Optional[List[int]] = None
    activation: str = 'tanh'
    loss_extras: Dict = field(default_factory=dict)
    deterministic_clock: bool = False

    def eval_epochs(self) -> List[int]:
        """评估轮次：eval_interval 的倍数以及最后一轮"""
        return [e for e in range(1, self.epochs + 1) if e % self.eval_interval == 0 or e == self.epochs]

    def train_config(self, combination: Combination) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size, lr=self.lr, clip=self.clip,
                           seed=combination.seed(self.seed), loss=combination.loss_config(self.loss_extras),
                           eval_interval=self.eval_interval)

    def model_config(self) -> Dict:
        config = {'activation': self.activation}
        if self.hidden_widths:
            config['hidden_widths'] = list(self.hidden_widths)
        return config


@dataclass
class RunResult:
    """
    单个组合的训练结果，发散后未到达的评估轮次误差为 +∞
    """
    combination: Combination
    epochs: List[int]
    errors: List[float]
    wall_times: List[float]
    status: str = STATUS_OK

    @property
    def combo_id(self) -> int:
        return self.combination.combo_id

    @property
    def final_error(self) -> float:
        return self.errors[-1] if self.errors else float('inf')

    @property
    def wall_time(self) -> float:
        return max(self.wall_times) if self.wall_times else 0.0

    def error_at(self, epoch: int) -> float:
        return self.errors[self.epochs.index(epoch)]

    @classmethod
    def from_history(cls, combination: Combination, history: History, eval_epochs: List[int]) -> 'RunResult':
        recorded = {r.epoch: r for r in history.records}
        errors, walls = [], []
        for epoch in eval_epochs:
            if epoch in recorded:
                errors.append(recorded[epoch].test_error)
                walls.append(recorded[epoch].wall_time)
            else:
                errors.append(float('inf'))
                walls.append(history.wall_time)
        return cls(combination, list(eval_epochs), errors, walls, history.status)

    def rows(self) -> List[Dict[str, object]]:
        options = self.combination.options()
        return [dict(options, epoch=epoch, test_error=error, wall_time_s=wall, status=self.status)
                for epoch, error, wall in zip(self.epochs, self.errors, self.wall_times)]


def run_combination(combination: Combination, train: Dataset, test: Dataset, settings: RunSettings) -> RunResult:
    """
    训练单个组合，模型种子与训练种子均为 seed ⊕ combo_id

    返回:
        RunResult；发散的组合记录为 diverged
    """
    seed = combination.seed(settings.seed)
    model = init_model(train.state_dim, combination.encoding_dim, combination.form, seed=seed,
                       config=settings.model_config())
    clock = CountingClock() if settings.deterministic_clock else None
    _, history = fit(model, train, test, settings.train_config(combination), clock)
    return RunResult.from_history(combination, history, settings.eval_epochs())


# 工作进程内共享的数据集与设置，由进程池初始化函数写入
_WORKER_CONTEXT: Dict[str, object] = {}


def _init_worker(train: Dataset, test: Dataset, settings: RunSettings) -> None:
    _WORKER_CONTEXT.update(train=train, test=test, settings=settings)


def _run_in_worker(combination: Combination) -> RunResult:
    return run_combination(combination, _WORKER_CONTEXT['train'], _WORKER_CONTEXT['test'],
                           _WORKER_CONTEXT['settings'])


def results_to_frame(results: List[RunResult]) -> pd.DataFrame:
    """结果列表转为按 (combo_id, epoch) 排序的结果表"""
    rows = [row for result in sorted(results, key=lambda r: r.combo_id) for row in result.rows()]
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def write_results(results: List[RunResult], path: Union[str, Path]) -> None:
    """整体重写结果 CSV"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        results_to_frame(results).to_csv(path, index=False)
    except OSError as e:
        raise DatasetIOError(f"写入结果文件失败 ({e})", path) from e


def _append_rows(result: RunResult, path: Path) -> None:
    try:
        frame = pd.DataFrame(result.rows(), columns=RESULT_COLUMNS)
        frame.to_csv(path, mode='a', header=not path.exists() or path.stat().st_size == 0, index=False)
    except OSError as e:
        raise DatasetIOError(f"追加结果失败 ({e})", path) from e


def load_results(path: Union[str, Path]) -> pd.DataFrame:
    """
    读取结果 CSV

    参数:
        path: 文件路径

    返回:
        DataFrame，列为 RESULT_COLUMNS；inf 解析为浮点无穷
    """
    path = Path(path)
    if not path.exists():
        raise DatasetIOError("结果文件不存在", path)
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetIOError(f"无法解析结果文件 ({e})", path) from e
    missing = [c for c in RESULT_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetIOError(f"结果文件缺少列 {missing}", path)
    return frame[RESULT_COLUMNS]


def _completed_runs(frame: pd.DataFrame, combinations: Dict[int, Combination],
                    eval_epochs: List[int]) -> Dict[int, RunResult]:
    """从已有结果表中恢复完整的运行，不完整的运行将被重算"""
    done = {}
    for combo_id, rows in frame.groupby('combo_id', sort=True):
        combo_id = int(combo_id)
        combination = combinations.get(combo_id)
        if combination is None:
            raise ConfigurationError(f"结果文件中的组合 {combo_id} 不在当前搜索空间内", 'resume')
        expected = combination.options()
        first = rows.iloc[0]
        for column in OPTION_COLUMNS:
            if first[column] != expected[column]:
                raise ConfigurationError(f"组合 {combo_id} 的 {column} 与当前搜索空间不一致", 'resume')
        rows = rows.sort_values('epoch')
        if [int(e) for e in rows['epoch']] != eval_epochs:
            continue
        done[combo_id] = RunResult(combination, list(eval_epochs), [float(v) for v in rows['test_error']],
                                   [float(v) for v in rows['wall_time_s']], str(first['status']))
    return done


class SearchRunner:
    """
    网格搜索协调器：分配组合、收集结果并串行追加结果文件
    """

    def __init__(self, space: SearchSpace, settings: Optional[RunSettings] = None, config: Optional[Dict] = None):
        """
        初始化

        参数:
            space: 搜索空间
            settings: 共享训练设置
            config: 配置信息，包含 workers
        """
        self.space = space
        self.settings = settings or RunSettings()
        self.config = config or {}
        self.config.setdefault('workers', 1)
        if int(self.config['workers']) < 1:
            raise ConfigurationError(f"工作进程数必须为正: {self.config['workers']}", 'workers')
        self.logger = logging.getLogger(__name__)

    def _check_inputs(self, combinations: List[Combination], train: Dataset, test: Dataset) -> None:
        for dataset in (train, test):
            if dataset.equation and dataset.equation != self.space.equation:
                raise ConfigurationError(
                    f"数据集方程 {dataset.equation} 与搜索空间方程 {self.space.equation} 不一致", 'equation')
        for combination in combinations:
            combination.loss_config(self.settings.loss_extras).validate(combination.form, self.space.equation)
        # 构造一次训练配置以提前暴露无效设置
        self.settings.train_config(combinations[0])

    def run(self, train: Dataset, test: Dataset, out_path: Optional[Union[str, Path]] = None,
            resume: bool = False) -> List[RunResult]:
        """
        运行搜索

        参数:
            train: 共享训练集
            test: 共享测试集
            out_path: 结果 CSV，提供时每完成一个组合追加一次
            resume: 跳过结果文件中已完成的组合

        返回:
            按 combo_id 排序的 RunResult 列表
        """
        combinations = self.space.enumerate()
        self._check_inputs(combinations, train, test)
        eval_epochs = self.settings.eval_epochs()
        by_id = {c.combo_id: c for c in combinations}

        results: Dict[int, RunResult] = {}
        path = Path(out_path) if out_path is not None else None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            if resume and path.exists() and path.stat().st_size > 0:
                results = _completed_runs(load_results(path), by_id, eval_epochs)
                self.logger.warning(f"恢复搜索: 跳过 {len(results)} 个已完成的组合")
            # 只保留完整的运行，后续结果在其后追加
            write_results(list(results.values()), path)

        pending = [c for c in combinations if c.combo_id not in results]
        total = len(combinations)
        workers = min(int(self.config['workers']), max(len(pending), 1))
        self.logger.info(f"开始网格搜索: 方程 {self.space.equation}, 组合 {total}, 待运行 {len(pending)}, "
                         f"工作进程 {workers}")

        def collect(result: RunResult) -> None:
            results[result.combo_id] = result
            if path is not None:
                _append_rows(result, path)
            if result.status == STATUS_DIVERGED:
                self.logger.warning(f"组合 {result.combo_id} 发散")
            self.logger.info(f"进度 {len(results)}/{total}: 组合 {result.combo_id} 误差 {result.final_error:.6g}")

        if workers <= 1:
            for combination in pending:
                collect(run_combination(combination, train, test, self.settings))
        else:
            with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                     initargs=(train, test, self.settings)) as pool:
                futures = [pool.submit(_run_in_worker, c) for c in pending]
                for future in as_completed(futures):
                    collect(future.result())

        ordered = [results[c.combo_id] for c in combinations]
        if path is not None:
            write_results(ordered, path)
            self.logger.info(f"结果已写入 {path}")
        return ordered


def run_search(space: SearchSpace, train: Dataset, test: Dataset, settings: Optional[RunSettings] = None,
               workers: int = 1, out_path: Optional[Union[str, Path]] = None, resume: bool = False) -> List[RunResult]:
    """运行网格搜索，参见 SearchRunner.run"""
    return SearchRunner(space, settings, {'workers': workers}).run(train, test, out_path, resume)

