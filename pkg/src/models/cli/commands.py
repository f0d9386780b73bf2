# 命令行模块

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from ..dynamics import Dataset, DatasetGenerator, load_dataset, save_dataset
from ..gridsearch import (
    OPERATOR_STUDY_EPOCHS,
    REPORT_DIMENSIONS,
    direct_comparison,
    load_results,
    mean_effect,
    mean_relative_times,
    norm_trend_vote,
    operator_study,
    operator_table,
    run_search,
    top_k,
)
from ..koopman import init_model, save_checkpoint
from ..training import fit
from ..utils.errors import ConfigurationError, DatasetIOError, IntegrationBlowupError, KoopmanLabError
from .config_loader import ExperimentConfig, load_config

logger = logging.getLogger(__name__)

TOOL_VERSION = '0.1.0'

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

TRAIN_FILE = 'train.kae'
TEST_FILE = 'test.kae'
RESULTS_FILE = 'results.csv'
ANALYSES = ('mean-effect', 'top-k', 'relative-times', 'direct', 'norm-trend')


def write_manifest(out_dir: Path, config: Optional[ExperimentConfig], command: str, seed: int = 0) -> None:
    """在输出目录写入 manifest.json：配置哈希、种子、工具版本与命令"""
    manifest = config.manifest(command, TOOL_VERSION) if config else {
        'config_sha256': None, 'config': None, 'seed': seed, 'tool_version': TOOL_VERSION, 'command': command}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / 'manifest.json').write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + '\n',
                                               encoding='utf-8')
    except OSError as e:
        raise DatasetIOError(f"写入 manifest 失败 ({e})", out_dir / 'manifest.json') from e


def _generate(config: ExperimentConfig) -> Dict[str, Dataset]:
    data = config.data
    generator = DatasetGenerator(data.generator_config())
    return {split: generator.generate(data.equation, count, data.n_steps, data.dt, data.seed, split)
            for split, count in (('train', data.n_train), ('test', data.n_test))}


def _load_or_generate(config: ExperimentConfig, data_dir: Optional[str]) -> Dict[str, Dataset]:
    if data_dir is None:
        return _generate(config)
    datasets = {'train': load_dataset(Path(data_dir) / TRAIN_FILE), 'test': load_dataset(Path(data_dir) / TEST_FILE)}
    for dataset in datasets.values():
        if dataset.equation != config.equation:
            raise ConfigurationError(f"数据集方程 {dataset.equation} 与配置 {config.equation} 不一致", 'data.equation')
    return datasets


def cmd_generate_data(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = Path(args.out)
    datasets = _generate(config)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(datasets['train'], out / TRAIN_FILE)
    save_dataset(datasets['test'], out / TEST_FILE)
    write_manifest(out, config, 'generate-data')
    train = datasets['train']
    print(f"方程 {config.equation}: 训练轨迹 {len(train)}, 测试轨迹 {len(datasets['test'])}, "
          f"步数 {train.n_steps}, dt {train.dt}, 状态维数 {train.state_dim}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = Path(args.out)
    datasets = _load_or_generate(config, args.data)
    model = init_model(datasets['train'].state_dim, config.model.encoding_dim, config.model.form,
                       seed=config.model.seed, config=config.model.init_config())
    model, history = fit(model, datasets['train'], datasets['test'], config.train_config())

    out.mkdir(parents=True, exist_ok=True)
    history.to_frame().to_csv(out / 'history.csv', index=False)
    save_checkpoint(model, out / 'model.ckpt')
    write_manifest(out, config, 'train')
    if history.diverged:
        logger.error(f"训练在第 {history.diverged_epoch} 轮发散")
        print(f"训练发散 (第 {history.diverged_epoch} 轮)")
        return EXIT_DIVERGED
    print(f"最终测试误差: {history.final_error():.6g}")
    return EXIT_OK


def cmd_grid_search(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = Path(args.out)
    space = config.search_space()
    datasets = _load_or_generate(config, args.data)
    workers = args.workers or config.search['workers']
    results = run_search(space, datasets['train'], datasets['test'], config.run_settings(), workers,
                         out / RESULTS_FILE, resume=args.resume)
    write_manifest(out, config, 'grid-search')
    diverged = sum(1 for r in results if r.status == 'diverged')
    print(f"完成 {len(results)} 个组合, 发散 {diverged} 个, 结果写入 {out / RESULTS_FILE}")
    return EXIT_OK


def _parse_fixed(items: Optional[List[str]], frame: pd.DataFrame) -> Dict[str, object]:
    """解析 --fixed key=value，取值按结果表中该列的类型转换"""
    fixed: Dict[str, object] = {}
    for item in items or []:
        key, sep, value = item.partition('=')
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigurationError(f"--fixed 应为 key=value 形式: {item!r}", 'fixed')
        if key not in REPORT_DIMENSIONS:
            raise ConfigurationError(f"未知维度 {key!r}, 可选 {list(REPORT_DIMENSIONS)}", 'fixed')
        column = frame[key] if key in frame.columns else None
        try:
            if column is not None and pd.api.types.is_integer_dtype(column):
                fixed[key] = int(value)
            elif column is not None and pd.api.types.is_float_dtype(column):
                fixed[key] = float(value)
            else:
                fixed[key] = value
        except ValueError as e:
            raise ConfigurationError(f"维度 {key} 的取值无法解析: {value!r}", 'fixed') from e
    return fixed


def cmd_report(args: argparse.Namespace) -> int:
    paths = [Path(p) for p in args.results]
    if args.analysis != 'norm-trend' and len(paths) != 1:
        raise ConfigurationError(f"{args.analysis} 只接受一个结果文件", 'results')
    frames = [load_results(path) for path in paths]
    frame = frames[0]
    epoch = args.epoch if args.epoch is not None else int(frame['epoch'].max())
    summary = None
    if args.analysis == 'mean-effect':
        table = mean_effect(frame, args.dimension)
    elif args.analysis == 'top-k':
        table = top_k(frame, epoch, args.k)
    elif args.analysis == 'relative-times':
        table = mean_relative_times(frame)
    elif args.analysis == 'direct':
        table = direct_comparison(frame, args.dimension, _parse_fixed(args.fixed, frame)).reset_index()
        table.columns.name = None
    else:
        if args.required < 1:
            raise ConfigurationError(f"--required 必须为正: {args.required}", 'required')
        required = min(args.required, len(frames))
        passed, table = norm_trend_vote(frames, epoch, required)
        table.insert(0, 'results', [str(path) for path in paths])
        votes = int(table['passed'].eq(True).sum())
        summary = f"norm 趋势{'成立' if passed else '不成立'}: {votes}/{len(frames)} 个结果 (需要 {required})"

    out = Path(args.out) if args.out else paths[0].with_name(f"report_{args.analysis.replace('-', '_')}.csv")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out, index=False)
    except OSError as e:
        raise DatasetIOError(f"写入报告失败 ({e})", out) from e
    with pd.option_context('display.max_rows', None, 'display.max_columns', None, 'display.width', 200):
        print(table.to_string(index=False))
    if summary:
        logger.info(summary)
        print(summary)
    logger.info(f"报告已写入 {out}")
    return EXIT_OK


def cmd_operator_study(args: argparse.Namespace) -> int:
    out = Path(args.out)
    config = load_config(args.config) if args.config else None
    if config is not None and config.equation != args.equation:
        raise ConfigurationError(f"配置方程 {config.equation} 与 --equation {args.equation} 不一致", 'data.equation')
    kwargs = {'workers': args.workers, 'out_path': out / RESULTS_FILE, 'resume': args.resume}
    if config is not None:
        datasets = _generate(config)
        settings = config.run_settings()
        if config.train['epochs'] is None:
            settings.epochs = OPERATOR_STUDY_EPOCHS
            settings.eval_interval = min(settings.eval_interval, settings.epochs)
        results = operator_study(args.equation, config.data.seed, datasets['train'], datasets['test'], settings,
                                 config.model.encoding_dim, **kwargs)
    else:
        results = operator_study(args.equation, args.seed, **kwargs)
    table = operator_table(results)
    table.to_csv(out / 'operator_study.csv', index=False)
    write_manifest(out, config, 'operator-study', seed=args.seed)
    print(table.to_string(index=False))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='python -m src.models.cli',
                                     description='Koopman 自编码器实验：数据生成、训练、网格搜索与报告')
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('generate-data', help='生成训练集与测试集')
    p.add_argument('--config', required=True)
    p.add_argument('--out', required=True)
    p.set_defaults(handler=cmd_generate_data)

    p = sub.add_parser('train', help='训练单个配置')
    p.add_argument('--config', required=True)
    p.add_argument('--data', default=None, help='generate-data 的输出目录，缺省时按配置生成')
    p.add_argument('--out', required=True)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser('grid-search', help='运行网格搜索')
    p.add_argument('--config', required=True)
    p.add_argument('--data', default=None)
    p.add_argument('--out', required=True)
    p.add_argument('--workers', type=int, default=None)
    p.add_argument('--resume', action='store_true')
    p.set_defaults(handler=cmd_grid_search)

    p = sub.add_parser('report', help='分析网格搜索结果')
    p.add_argument('--results', required=True, nargs='+', help='结果文件；norm-trend 可给出多个种子的结果')
    p.add_argument('--analysis', required=True, choices=ANALYSES)
    p.add_argument('--dimension', default='operator', choices=REPORT_DIMENSIONS)
    p.add_argument('--epoch', type=int, default=None)
    p.add_argument('--k', type=int, default=10)
    p.add_argument('--fixed', action='append', metavar='KEY=VALUE', help='direct 分析中固定的维度取值，可重复')
    p.add_argument('--required', type=int, default=2, help='norm-trend 需要成立的最少结果数，不超过文件数')
    p.add_argument('--out', default=None)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser('operator-study', help='算子形式与算子损失对比')
    p.add_argument('--equation', required=True)
    p.add_argument('--config', default=None)
    p.add_argument('--out', required=True)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--workers', type=int, default=1)
    p.add_argument('--resume', action='store_true')
    p.set_defaults(handler=cmd_operator_study)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行入口

    返回:
        退出码：0 成功, 2 配置错误, 3 数据生成失败, 4 单次训练发散, 1 其他错误
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    try:
        return args.handler(args)
    except ConfigurationError as e:
        logger.error(f"配置错误: {e}")
        print(f"配置错误: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationBlowupError as e:
        logger.error(f"数据生成失败: {e}")
        print(f"数据生成失败: {e}", file=sys.stderr)
        return EXIT_DATA
    except KoopmanLabError as e:
        logger.error(f"执行失败: {e}")
        print(f"执行失败: {e}", file=sys.stderr)
        return EXIT_FAILURE
