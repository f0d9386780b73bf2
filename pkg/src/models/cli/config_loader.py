# 实验配置加载模块

import hashlib
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..gridsearch import (
    DEFAULT_DT,
    RunSettings,
    SearchSpace,
    epoch_budget,
    operator_study_space,
    preset_space,
)
from ..dynamics.equations import ODE_NAMES, PDE_NAMES
from ..koopman import ACTIVATIONS, FORMS
from ..losses import LossConfig
from ..training import TrainConfig
from ..utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

_MISSING = object()

# 各配置节的键: (类型, 默认值)；默认值 _MISSING 表示必填
_SCHEMA: Dict[str, Dict[str, Tuple[type, Any]]] = {
    'data': {
        'equation': (str, _MISSING),
        'n_train': (int, 200),
        'n_test': (int, 50),
        'n_steps': (int, 20),
        'dt': (float, None),
        'seed': (int, 0),
        'substeps': (int, 10),
        'grid_points': (int, 128),
        'classical_lorenz': (bool, False),
        'stable_fluid': (bool, False),
        'workers': (int, 1),
    },
    'model': {
        'encoding_dim': (int, 16),
        'hidden_widths': (list, None),
        'activation': (str, 'tanh'),
        'form': (str, 'dense'),
        'seed': (int, 0),
    },
    'loss': {
        'accuracy': (str, 'full'),
        'embedding': (str, 'none'),
        'operator': (str, 'none'),
        'auxiliary': (str, 'none'),
        'lambda': (float, 1.0),
        'weights': (dict, None),
        'isometry_source': (str, 'latent'),
        'isometry_samples': (int, 64),
        'power_iterations': (int, 10),
    },
    'train': {
        'epochs': (int, None),
        'lr': (float, 1e-3),
        'batch_size': (int, 32),
        'clip': (float, 1.0),
        'eval_interval': (int, 1),
        'seed': (int, 0),
    },
    'search': {
        'encoding_dims': (list, None),
        'accuracy': (list, None),
        'embedding': (list, None),
        'operator': (list, None),
        'auxiliary': (list, None),
        'forms': (list, None),
        'discount_factors': (list, None),
        'constraints': (list, None),
        'workers': (int, 1),
        'preset': (str, None),
        'deterministic_clock': (bool, False),
    },
}

# 必须为正的整数键
_POSITIVE_INTS = {'data.n_train', 'data.n_test', 'data.n_steps', 'data.substeps', 'data.grid_points',
                  'data.workers', 'model.encoding_dim', 'train.batch_size', 'train.eval_interval',
                  'search.workers', 'loss.isometry_samples', 'loss.power_iterations'}
_NON_NEGATIVE_INTS = {'data.seed', 'model.seed', 'train.seed', 'train.epochs'}


def _check_type(name: str, value: Any, expected: type) -> Any:
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"应为数值, 实际为 {value!r}", name)
        return float(value)
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"应为整数, 实际为 {value!r}", name)
        return value
    if not isinstance(value, expected):
        raise ConfigurationError(f"应为 {expected.__name__}, 实际为 {value!r}", name)
    return value


def _parse_section(section: str, raw: Dict[str, Any]) -> Dict[str, Any]:
    schema = _SCHEMA[section]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigurationError(f"未知配置项 {unknown}", f"{section}.{unknown[0]}")
    values = {}
    for key, (expected, default) in schema.items():
        name = f"{section}.{key}"
        if key not in raw:
            if default is _MISSING:
                raise ConfigurationError("缺少必填配置项", name)
            values[key] = default
            continue
        value = raw[key]
        if section == 'train' and key == 'clip' and value is False:
            values[key] = None
            continue
        values[key] = _check_type(name, value, expected)
        if name in _POSITIVE_INTS and values[key] < 1:
            raise ConfigurationError(f"必须为正整数: {value}", name)
        if name in _NON_NEGATIVE_INTS and values[key] < 0:
            raise ConfigurationError(f"不能为负: {value}", name)
    return values


@dataclass
class DataConfig:
    equation: str
    n_train: int = 200
    n_test: int = 50
    n_steps: int = 20
    dt: Optional[float] = None
    seed: int = 0
    substeps: int = 10
    grid_points: int = 128
    classical_lorenz: bool = False
    stable_fluid: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.equation not in ODE_NAMES + PDE_NAMES:
            raise ConfigurationError(f"未知方程 {self.equation!r}", 'data.equation')
        if self.dt is None:
            self.dt = DEFAULT_DT[self.equation]
        if not self.dt > 0:
            raise ConfigurationError(f"时间步长必须为正: {self.dt}", 'data.dt')
        if self.grid_points < 3:
            raise ConfigurationError(f"网格点数至少为 3: {self.grid_points}", 'data.grid_points')

    def generator_config(self) -> Dict[str, Any]:
        return {'substeps': self.substeps, 'grid_points': self.grid_points, 'workers': self.workers,
                'classical_lorenz': self.classical_lorenz, 'stable_fluid': self.stable_fluid}


@dataclass
class ModelConfig:
    encoding_dim: int = 16
    hidden_widths: Optional[List[int]] = None
    activation: str = 'tanh'
    form: str = 'dense'
    seed: int = 0

    def __post_init__(self):
        if self.form not in FORMS:
            raise ConfigurationError(f"取值 {self.form!r} 不在 {FORMS} 中", 'model.form')
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"取值 {self.activation!r} 不在 {tuple(ACTIVATIONS)} 中", 'model.activation')
        if self.form == 'jordan' and self.encoding_dim % 2:
            raise ConfigurationError(f"jordan 形式要求偶数编码维数: {self.encoding_dim}", 'model.encoding_dim')
        if self.hidden_widths is not None:
            if not self.hidden_widths or any(isinstance(w, bool) or not isinstance(w, int) or w < 1
                                             for w in self.hidden_widths):
                raise ConfigurationError(f"隐藏层宽度必须为正整数列表: {self.hidden_widths}", 'model.hidden_widths')

    def init_config(self) -> Dict[str, Any]:
        config = {'activation': self.activation}
        if self.hidden_widths:
            config['hidden_widths'] = list(self.hidden_widths)
        return config


@dataclass
class ExperimentConfig:
    """
    一个实验配置文件的全部内容，加载时即完成校验
    """
    data: DataConfig
    model: ModelConfig
    loss: LossConfig
    train: Dict[str, Any]
    search: Dict[str, Any]
    source: Optional[str] = None
    digest: str = ''
    sections: List[str] = field(default_factory=list)

    @property
    def equation(self) -> str:
        return self.data.equation

    @property
    def epochs(self) -> int:
        epochs = self.train['epochs']
        return epoch_budget(self.equation) if epochs is None else epochs

    def loss_extras(self) -> Dict[str, Any]:
        """网格搜索中各组合共享的损失设置"""
        return {'weights': dict(self.loss.weights), 'isometry_source': self.loss.isometry_source,
                'isometry_samples': self.loss.isometry_samples, 'power_iterations': self.loss.power_iterations}

    def train_config(self) -> TrainConfig:
        t = self.train
        eval_interval = min(t['eval_interval'], self.epochs) if self.epochs else 1
        return TrainConfig(epochs=self.epochs, batch_size=t['batch_size'], lr=t['lr'], clip=t['clip'],
                           seed=t['seed'], loss=self.loss, eval_interval=eval_interval)

    def run_settings(self) -> RunSettings:
        cfg = self.train_config()
        return RunSettings(epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr, clip=cfg.clip,
                           eval_interval=cfg.eval_interval, seed=cfg.seed, hidden_widths=self.model.hidden_widths,
                           activation=self.model.activation, loss_extras=self.loss_extras(),
                           deterministic_clock=self.search['deterministic_clock'])

    def search_space(self) -> SearchSpace:
        """
        由 [search] 构造搜索空间；preset 优先，未列出的维度取 [model]/[loss] 中的单一取值
        """
        s = self.search
        preset = s['preset']
        if preset == 'operator_study':
            return operator_study_space(self.equation, self.model.encoding_dim)
        if preset is not None:
            if preset != self.equation:
                raise ConfigurationError(f"预设 {preset} 与方程 {self.equation} 不一致", 'search.preset')
            return preset_space(preset)
        space = {
            'encoding_dims': s['encoding_dims'] or [self.model.encoding_dim],
            'forms': s['forms'] or [self.model.form],
            'accuracy': s['accuracy'] or [self.loss.accuracy],
            'discount_factors': s['discount_factors'] or [self.loss.discount],
            'embedding': s['embedding'] or [self.loss.embedding],
            'operator': s['operator'] or [self.loss.operator],
            'auxiliary': s['auxiliary'] or [self.loss.auxiliary],
        }
        if s['constraints'] is not None:
            space['constraints'] = s['constraints']
        return SearchSpace(self.equation, **space)

    def validate(self) -> None:
        """构造所有派生对象，使配置错误在运行前暴露"""
        self.train_config().loss.validate(self.model.form, self.equation)
        if 'search' in self.sections:
            self.search_space().enumerate()

    def manifest(self, command: str, version: str) -> Dict[str, Any]:
        return {'config_sha256': self.digest, 'config': self.source, 'seed': self.data.seed,
                'tool_version': version, 'command': command}


def parse_config(raw: Dict[str, Any], source: Optional[str] = None, digest: str = '') -> ExperimentConfig:
    """
    校验并构造实验配置

    参数:
        raw: TOML 解析得到的字典
        source: 配置文件路径
        digest: 配置文件的 SHA-256

    返回:
        ExperimentConfig
    """
    unknown = sorted(set(raw) - set(_SCHEMA))
    if unknown:
        raise ConfigurationError(f"未知配置节 {unknown}", unknown[0])
    for section, values in raw.items():
        if not isinstance(values, dict):
            raise ConfigurationError("配置节必须是表", section)
    parsed = {section: _parse_section(section, raw.get(section, {})) for section in _SCHEMA}

    loss = parsed['loss']
    try:
        loss_config = LossConfig(accuracy=loss['accuracy'], embedding=loss['embedding'], operator=loss['operator'],
                                 auxiliary=loss['auxiliary'], discount=loss['lambda'],
                                 weights={k: float(v) for k, v in (loss['weights'] or {}).items()},
                                 isometry_source=loss['isometry_source'],
                                 isometry_samples=loss['isometry_samples'],
                                 power_iterations=loss['power_iterations'])
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigurationError):
            raise ConfigurationError(e.message, f"loss.{e.field}" if e.field else "loss") from e
        raise ConfigurationError(f"无效的损失配置: {e}", 'loss.weights') from e

    config = ExperimentConfig(data=DataConfig(**parsed['data']), model=ModelConfig(**parsed['model']),
                              loss=loss_config, train=parsed['train'], search=parsed['search'],
                              source=source, digest=digest, sections=sorted(raw))
    config.validate()
    return config


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    读取 TOML 实验配置文件

    参数:
        path: 文件路径

    返回:
        校验后的 ExperimentConfig
    """
    path = Path(path)
    try:
        content = path.read_bytes()
    except OSError as e:
        raise ConfigurationError(f"无法读取配置文件 {path}: {e}", 'config') from e
    try:
        raw = tomllib.loads(content.decode('utf-8'))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigurationError(f"配置文件格式错误 {path}: {e}", 'config') from e
    config = parse_config(raw, str(path), hashlib.sha256(content).hexdigest())
    logger.info(f"已加载配置 {path}: 方程 {config.equation}")
    return config
