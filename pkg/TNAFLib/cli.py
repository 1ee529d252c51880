# -*- coding: utf-8 -*-

"""
命令行入口：tnaf train / eval / sample / invert / check / inspect / ablate
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from .ckpt import load_checkpoint, save_checkpoint
from .config import AblationSection, RunConfig
from .constants import DATA_FORMAT_CSV, DATA_FORMATS, HEAD_TYPES, RESULT_LINE_FORMAT
from .data import DatasetMatrix, load_matrix, make_splits, save_matrix, standardize
from .exceptions import DataShapeError, TNAFBaseException
from .main import FlowModel
from .oracles import run_oracles
from .trainer import evaluate, train
from .utils import get_console, setup_logging

logger = logging.getLogger(__name__)


def _count_line(model: FlowModel, count_with_psi: bool) -> str:
    count = model.param_count + (model.psi_count if count_with_psi else 0)
    return "param_count={:d}".format(count)


def _progress(enabled: bool) -> Progress:
    return Progress(
        TextColumn("{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        TimeElapsedColumn(),
        console=get_console(stderr=True),
        transient=True,
        disable=not enabled,
    )


def _prepare(config: RunConfig, config_path: Path):
    """读取数据、划分并标准化，返回 (D, splits, stats)"""
    matrix = config.data.load(config_path.parent)
    D = config.model.resolve_D(matrix.cols)
    splits = make_splits(matrix, config.data.fractions, config.data.seed)
    splits, stats = standardize(splits)
    logger.info(
        "数据 %d 行 × %d 列，划分为 %d / %d / %d",
        matrix.rows,
        D,
        splits.train.rows,
        splits.val.rows,
        splits.test.rows,
    )
    return D, splits, stats


def _fit(model: FlowModel, splits, train_config, show_progress: bool, checked_mode: bool):
    with _progress(show_progress) as progress:
        task = progress.add_task("训练 {}".format(model.head_type), total=train_config.max_steps)
        return train(
            model,
            splits,
            train_config,
            on_step=lambda step: progress.update(task, completed=step),
            checked_mode=checked_mode,
        )


def cmd_train(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    config = RunConfig.load(config_path)
    D, splits, stats = _prepare(config, config_path)
    model = config.model.build(D, seed=config.train.seed)
    _fit(model, splits, config.train, args.progress, args.checked)

    save_checkpoint(args.output, model, config, stats)
    mean, std_err = evaluate(model, splits.test)
    get_console().print(
        RESULT_LINE_FORMAT.format(mean=mean, std_err=std_err)
        + " "
        + _count_line(model, args.count_with_psi)
    )
    return 0


def _load_rows(path: str, data_format: str, D: int) -> np.ndarray:
    matrix = load_matrix(path, data_format)
    if matrix.cols != D:
        raise DataShapeError("数据为 {} 列，模型为 {} 维".format(matrix.cols, D))
    return matrix.values


def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.model)
    values = _load_rows(args.data, args.format, checkpoint.model.D)
    if checkpoint.stats is not None:
        values = checkpoint.stats.apply(values)
    mean, std_err = evaluate(checkpoint.model, values)
    if args.raw_space and checkpoint.stats is not None:
        mean += checkpoint.stats.log_scale
    get_console().print(RESULT_LINE_FORMAT.format(mean=mean, std_err=std_err))
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.model)
    samples = checkpoint.model.sample(args.n, args.seed)
    if checkpoint.stats is not None:
        samples = checkpoint.stats.invert(samples)
    save_matrix(DatasetMatrix(samples), args.output, DATA_FORMAT_CSV)
    logger.info("已写出 %d 个样本到 %s", args.n, args.output)
    return 0


def cmd_invert(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.model)
    values = _load_rows(args.data, args.format, checkpoint.model.D)
    if checkpoint.stats is not None:
        values = checkpoint.stats.apply(values)
    save_matrix(DatasetMatrix(checkpoint.model.log_prob(values).y), args.output, DATA_FORMAT_CSV)
    logger.info("已写出 %d 行隐变量到 %s", values.shape[0], args.output)
    return 0


def _model_for_check(args: argparse.Namespace) -> FlowModel:
    if args.model is not None:
        return load_checkpoint(args.model).model
    config_path = Path(args.config)
    config = RunConfig.load(config_path)
    D = config.model.D
    if D is None:
        D = config.model.resolve_D(config.data.load(config_path.parent).cols)
    return config.model.build(D, seed=config.train.seed)


def cmd_check(args: argparse.Namespace) -> int:
    model = _model_for_check(args)
    results = run_oracles(model, seed=args.seed)

    table = Table(title="数值校验 {}（D={}）".format(model.head_type, model.D))
    table.add_column("校验")
    table.add_column("结果")
    table.add_column("误差", justify="right")
    table.add_column("阈值", justify="right")
    table.add_column("说明")
    for result in results:
        table.add_row(
            result.name,
            "PASS" if result.passed else "FAIL",
            "{:.3g}".format(result.measure),
            "{:.3g}".format(result.threshold),
            result.detail,
        )
    console = get_console()
    console.print(table)
    for result in results:
        console.print("{}={}".format(result.name, "pass" if result.passed else "fail"))
    return 0 if all(result.passed for result in results) else 1


def cmd_inspect(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.model)
    model = checkpoint.model
    console = get_console()

    summary = Table(title=str(args.model), show_header=False)
    summary.add_column("键")
    summary.add_column("值")
    summary.add_row("format_version", str(checkpoint.header["format_version"]))
    summary.add_row("D", str(model.D))
    summary.add_row("head_type", model.head_type)
    summary.add_row("base", model.base.kind)
    summary.add_row("E / heads / layers / mlp", "{} / {} / {} / {}".format(
        model.config.E, model.config.heads, model.config.layers, model.config.mlp_hidden
    ))
    summary.add_row("psi_dim", str(model.config.psi_dim))
    summary.add_row("standardized", "否" if checkpoint.stats is None else "是")
    summary.add_row("blob_sha256", checkpoint.header["blob_sha256"])
    console.print(summary)

    params = Table(title="参数")
    params.add_column("名称")
    params.add_column("形状")
    params.add_column("个数", justify="right")
    for name, node in model.params.items():
        params.add_row(name, str(list(node.shape)), str(node.value.size))
    console.print(params)
    console.print(_count_line(model, args.count_with_psi))
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    config = RunConfig.load(config_path)
    grid = config.ablation if config.ablation is not None else AblationSection()
    heads = args.heads or grid.heads
    layers = args.layers or grid.layers
    seeds = args.seeds or grid.seeds
    D, splits, _ = _prepare(config, config_path)

    table = Table(title="头部消融")
    table.add_column("head")
    table.add_column("layers", justify="right")
    table.add_column("param_count", justify="right")
    table.add_column("test_ll（均值 ± 标准差）", justify="right")

    for head in heads:
        for depth in layers:
            section = dataclasses.replace(config.model, head_type=head, layers=depth)
            scores: List[float] = []
            count = 0
            for seed in seeds:
                model = section.build(D, seed=seed)
                count = model.param_count
                _fit(
                    model,
                    splits,
                    dataclasses.replace(config.train, seed=seed),
                    args.progress,
                    checked_mode=False,
                )
                scores.append(evaluate(model, splits.test)[0])
            std = float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0
            table.add_row(
                head,
                str(depth),
                str(count),
                "{:.4f} ± {:.4f}".format(float(np.mean(scores)), std),
            )
            logger.info("%s / %d 层：%s", head, depth, scores)
    get_console().print(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tnaf",
        description="变换器自回归流：训练、评估、采样与校验",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="更详细的日志")
    parser.add_argument("-q", "--quiet", action="count", default=0, help="更安静的日志")
    commands = parser.add_subparsers(dest="command", required=True)

    def positive_int(text: str) -> int:
        value = int(text)
        if value < 1:
            raise argparse.ArgumentTypeError("必须不小于 1")
        return value

    train_cmd = commands.add_parser("train", help="训练并写出检查点")
    train_cmd.add_argument("-c", "--config", required=True, help="运行配置 JSON")
    train_cmd.add_argument("-o", "--output", required=True, help="检查点输出路径")
    train_cmd.add_argument("--count-with-psi", action="store_true", help="参数个数包含伪参数")
    train_cmd.add_argument("--no-progress", dest="progress", action="store_false")
    train_cmd.add_argument("--checked", action="store_true", help="在检查模式下训练")
    train_cmd.set_defaults(handler=cmd_train)

    for name, handler, text in (
        ("eval", cmd_eval, "评估数据的平均对数似然"),
        ("invert", cmd_invert, "把数据映射为基分布中的隐变量"),
    ):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("-m", "--model", required=True, help="检查点")
        sub.add_argument("-d", "--data", required=True, help="数据文件")
        sub.add_argument("--format", choices=DATA_FORMATS, default=DATA_FORMAT_CSV)
        if name == "eval":
            sub.add_argument("--raw-space", action="store_true", help="报告原始数据空间的对数似然")
        else:
            sub.add_argument("-o", "--output", required=True, help="输出 csv")
        sub.set_defaults(handler=handler)

    sample_cmd = commands.add_parser("sample", help="逆变换采样")
    sample_cmd.add_argument("-m", "--model", required=True, help="检查点")
    sample_cmd.add_argument("-n", type=positive_int, required=True, help="样本数")
    sample_cmd.add_argument("--seed", type=int, default=0)
    sample_cmd.add_argument("-o", "--output", required=True, help="输出 csv")
    sample_cmd.set_defaults(handler=cmd_sample)

    check_cmd = commands.add_parser("check", help="运行数值校验")
    source = check_cmd.add_mutually_exclusive_group(required=True)
    source.add_argument("-m", "--model", help="检查点")
    source.add_argument("-c", "--config", help="运行配置（随机初始化的模型）")
    check_cmd.add_argument("--seed", type=int, default=0)
    check_cmd.set_defaults(handler=cmd_check)

    inspect_cmd = commands.add_parser("inspect", help="查看检查点")
    inspect_cmd.add_argument("-m", "--model", required=True, help="检查点")
    inspect_cmd.add_argument("--count-with-psi", action="store_true", help="参数个数包含伪参数")
    inspect_cmd.set_defaults(handler=cmd_inspect)

    ablate_cmd = commands.add_parser("ablate", help="头部类型 × 层数 × 种子的消融")
    ablate_cmd.add_argument("-c", "--config", required=True, help="运行配置 JSON")
    ablate_cmd.add_argument("--heads", nargs="+", choices=HEAD_TYPES)
    ablate_cmd.add_argument("--layers", nargs="+", type=positive_int)
    ablate_cmd.add_argument("--seeds", nargs="+", type=int)
    ablate_cmd.add_argument("--no-progress", dest="progress", action="store_false")
    ablate_cmd.set_defaults(handler=cmd_ablate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行入口，返回退出码"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose - args.quiet)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except TNAFBaseException as error:
        get_console(stderr=True).print(
            error.describe(), style="red", markup=False, soft_wrap=True
        )
        logger.debug("退出码 %d", error.exit_code, exc_info=True)
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
