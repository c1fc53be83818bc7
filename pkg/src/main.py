#!/usr/bin/env python3
"""
DriftFollow 主入口模块

提供完整流水线的命令行接口：合成数据生成、按速度划分任务、增量训练、评估与报告。
"""

import argparse
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import yaml
from dotenv import load_dotenv

from src.config.settings import LOG_LEVELS, Settings
from src.data.generator import REGIMES, generate_dataset, generator_manifest
from src.data.io import (load_events, load_tasks, read_json, save_events,
                         task_filename, write_json, write_manifest,
                         write_task_file)
from src.data.tasks import speed_distribution, split_tasks
from src.evaluation.matrix import (build_stage_matrix, final_summary,
                                   retention_check)
from src.evaluation.report import (MATRIX_CSV, REPORT_MD, read_matrix,
                                   render_report)
from src.models.event import TaskSet
from src.models.network import DEFAULT_HORIZON
from src.models.regularization import Accumulation
from src.models.training import METHOD_ORDER, Checkpoint, Method, TrainConfig
from src.nn.checkpoint import discover_checkpoints, save_checkpoint
from src.sim.export import write_frame
from src.train.trainer import CurriculumResult, Trainer, write_history
from src.utils.exceptions import (ArtifactIOError, ConfigurationError,
                                  DriftFollowException, MissingArtifactError)
from src.utils.logger import get_logger, setup_logger

VERSION = "0.1.0"
REPRO_COUNT = 600
REPRO_MANIFEST = "manifest.json"
HISTORY_CSV = "history.csv"
RUN_CONFIG = "run_config.txt"
SPEED_CSV = "speed_distribution.csv"

# 命令行参数名 -> TrainConfig 字段
TRAIN_FLAGS = (
    "method",
    "epochs",
    "horizon",
    "learning_rate",
    "batch_size",
    "penalty_weight",
    "dt",
    "rollout_chunk",
    "hidden_size",
    "reg_lambda",
    "reg_accumulation",
    "importance_cap",
)
# 配置文件中只属于应用设置的键
APP_KEYS = tuple(k for k in Settings.model_fields if k not in TrainConfig.model_fields)


def positive_int(text: str) -> int:
    """argparse 类型：正整数"""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def nonnegative_int(text: str) -> int:
    """argparse 类型：非负整数"""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def positive_float(text: str) -> float:
    """argparse 类型：有限正实数"""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not value > 0.0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a finite number > 0, got {text}")
    return value


def _common_parser() -> argparse.ArgumentParser:
    """所有子命令共享的参数"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="配置文件路径 (默认: config/config.yaml)")
    common.add_argument(
        "--jobs",
        type=nonnegative_int,
        help="工作线程数，0 表示可用核心数，1 为完全串行 (默认: 配置值，未配置为 0)",
    )
    common.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        help="日志级别 (默认: 配置值，未配置为 INFO)",
    )
    common.add_argument("--log-file", help="日志文件路径 (默认: 不写文件)")
    return common


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed", type=int, help="随机种子 (默认: DRIFTFOLLOW_SEED，其次配置值，最后 42)"
    )


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    """训练配置覆盖项；未给出时取配置文件的值"""
    defaults = TrainConfig()
    group = parser.add_argument_group("训练配置（覆盖配置文件）")
    group.add_argument("--epochs", type=positive_int, help=f"每个任务的训练轮数 (默认: {defaults.epochs})")
    group.add_argument("--horizon", type=positive_int, help=f"历史窗口长度 (默认: {defaults.horizon})")
    group.add_argument(
        "--learning-rate", type=positive_float, help=f"Adam 学习率 (默认: {defaults.learning_rate})"
    )
    group.add_argument("--batch-size", type=positive_int, help=f"每批事件数 (默认: {defaults.batch_size})")
    group.add_argument(
        "--penalty-weight", type=float, help=f"碰撞/倒车惩罚 (默认: {defaults.penalty_weight})"
    )
    group.add_argument("--dt", type=positive_float, help=f"仿真步长，秒 (默认: {defaults.dt})")
    group.add_argument(
        "--rollout-chunk", type=positive_int, help=f"截断 BPTT 块长 (默认: {defaults.rollout_chunk})"
    )
    group.add_argument(
        "--hidden-size", type=positive_int, help=f"LSTM 隐藏层维度 (默认: {defaults.hidden_size})"
    )
    group.add_argument(
        "--reg-lambda", type=float, help="正则强度 λ (默认: EWC 100，MAS 1，其余 0)"
    )
    group.add_argument(
        "--reg-accumulation",
        choices=[a.value for a in Accumulation],
        help=f"重要性跨任务累积方式 (默认: {defaults.reg_accumulation.value})",
    )
    group.add_argument(
        "--importance-cap",
        type=positive_int,
        help=f"估计重要性的最大样本数 (默认: {defaults.importance_cap})",
    )


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(
        prog="driftfollow",
        description="DriftFollow: 基于 LSTM 的增量学习跟驰控制器",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  %(prog)s generate --count 300 --seed 7 --out data/events.jsonl
  %(prog)s split --in data/events.jsonl --out-dir data/tasks
  %(prog)s train --tasks-dir data/tasks --method ewc --out-dir runs/ewc
  %(prog)s evaluate --tasks-dir data/tasks --checkpoints-dir runs --out-dir report
  %(prog)s repro --seed 42 --out-dir repro
        """,
    )
    parser.add_argument("--version", action="version", version=f"DriftFollow {VERSION}")
    common = _common_parser()
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    generate = commands.add_parser("generate", parents=[common], help="生成 IDM 合成跟驰事件")
    generate.add_argument("--count", type=positive_int, default=300, help="事件总数 (默认: 300)")
    generate.add_argument(
        "--regimes", default=",".join(REGIMES), help=f"逗号分隔的工况 (默认: {','.join(REGIMES)})"
    )
    generate.add_argument("--dt", type=positive_float, default=0.1, help="采样步长，秒 (默认: 0.1)")
    _add_seed(generate)
    generate.add_argument("--out", type=Path, required=True, help="输出事件文件（.jsonl 或 .csv）")

    split = commands.add_parser("split", parents=[common], help="按平均跟驰速度划分三个任务集")
    split.add_argument("--in", dest="input", type=Path, required=True, help="输入事件文件")
    _add_seed(split)
    split.add_argument(
        "--horizon",
        type=positive_int,
        default=DEFAULT_HORIZON,
        help=f"事件最短长度按此窗口检查 (默认: {DEFAULT_HORIZON})",
    )
    split.add_argument("--out-dir", type=Path, required=True, help="任务文件输出目录")

    train = commands.add_parser("train", parents=[common], help="运行一个方法的训练课程")
    train.add_argument("--tasks-dir", type=Path, required=True, help="split 输出目录")
    train.add_argument(
        "--method", choices=[m.value for m in METHOD_ORDER], help="训练方法 (默认: 配置值，未配置为 baseline)"
    )
    _add_seed(train)
    train.add_argument("--out-dir", type=Path, required=True, help="检查点与历史输出目录")
    _add_train_flags(train)

    for name, help_text in (
        ("evaluate", "评估全部检查点并生成报告"),
        ("report", "由已有 stage_matrix.csv 重新生成报告（不存在时先评估）"),
    ):
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("--tasks-dir", type=Path, required=True, help="split 输出目录")
        sub.add_argument(
            "--checkpoints-dir", type=Path, required=True, help="检查点目录（含一层子目录）"
        )
        _add_seed(sub)
        sub.add_argument("--out-dir", type=Path, required=True, help="报告输出目录")

    repro = commands.add_parser("repro", parents=[common], help="一次性运行完整流水线")
    _add_seed(repro)
    repro.add_argument(
        "--count", type=positive_int, default=REPRO_COUNT, help=f"合成事件数 (默认: {REPRO_COUNT})"
    )
    repro.add_argument("--out-dir", type=Path, required=True, help="输出根目录")
    _add_train_flags(repro)
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """解析命令行参数"""
    return build_parser().parse_args(argv)


def load_settings(args: argparse.Namespace) -> Settings:
    """加载应用配置：命令行 > 环境变量 > 配置文件 > 默认值"""
    load_dotenv()
    if args.config is not None:
        if not args.config.exists():
            raise ConfigurationError(f"config file not found: {args.config}")
        config_path = str(args.config)
    else:
        config_path = os.getenv("DRIFTFOLLOW_CONFIG_PATH", "config/config.yaml")

    try:
        settings = Settings.load_from_yaml(config_path)
    except ValueError as e:
        raise ConfigurationError(f"invalid settings: {e}")

    update: Dict[str, Any] = {"config_path": config_path}
    if args.log_level:
        update["log_level"] = args.log_level
    if args.log_file:
        update["log_file"] = args.log_file
    if args.jobs is not None:
        update["jobs"] = args.jobs
    return settings.model_copy(update=update)


def resolve_seed(args: argparse.Namespace, settings: Settings) -> int:
    """--seed 优先，其次 DRIFTFOLLOW_SEED / 配置文件"""
    return args.seed if args.seed is not None else settings.seed


def build_train_config(args: argparse.Namespace, settings: Settings) -> TrainConfig:
    """配置文件的训练键 + 命令行覆盖"""
    path = Path(settings.config_path)
    base = TrainConfig.load_from_yaml(path, ignore=APP_KEYS) if path.exists() else TrainConfig()
    data = base.model_dump()
    for key in TRAIN_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    data["seed"] = resolve_seed(args, settings)
    return TrainConfig.from_mapping(data)


def _tasks_dt(tasks: Sequence[TaskSet]) -> float:
    for task in tasks:
        for event in task.events:
            return event.dt
    raise MissingArtifactError("task files contain no events")


def generate(args: argparse.Namespace, settings: Settings) -> int:
    """generate 子命令"""
    seed = resolve_seed(args, settings)
    regimes = [r.strip() for r in args.regimes.split(",") if r.strip()]
    dataset = generate_dataset(args.count, regimes, args.dt, seed, settings.jobs)
    events = [event for regime in regimes for event in dataset[regime]]
    path = save_events(events, args.out)
    manifest = generator_manifest(dataset, args.dt, seed)
    write_json(manifest, manifest_path(path))

    print(f"已生成 {len(events)} 个事件 -> {path}")
    for row in manifest["summary"]:
        if row["count"] == 0:
            print(f"  {row['regime']:<5} {row['count']:>5}")
            continue
        print(
            f"  {row['regime']:<5} {row['count']:>5}  平均跟驰速度 "
            f"min {row['mean_fv_speed_min']:.2f} / mean {row['mean_fv_speed_mean']:.2f} / "
            f"max {row['mean_fv_speed_max']:.2f} m/s"
        )
    return 0


def manifest_path(events_path: Path) -> Path:
    """事件文件旁的生成清单路径"""
    return events_path.with_name(events_path.name + ".manifest.json")


def split(args: argparse.Namespace, settings: Settings) -> int:
    """split 子命令"""
    seed = resolve_seed(args, settings)
    events = load_events(args.input, args.horizon)
    tasks = split_tasks(events, seed)

    out_dir: Path = args.out_dir
    for task in tasks:
        write_task_file(task, out_dir / task_filename(task.task_id))
    write_frame(speed_distribution(tasks), out_dir / SPEED_CSV)

    manifest: Dict[str, Any] = {
        "source": str(args.input),
        "seed": seed,
        "n_events": len(events),
        "boundaries": {"p33_3": tasks[2].speed_range.high, "p66_7": tasks[0].speed_range.low},
        "tasks": [
            {
                "task_id": task.task_id,
                "range": task.speed_range.label(),
                "train": len(task.train),
                "val": len(task.val),
                "test": len(task.test),
            }
            for task in tasks
        ],
    }
    generated = manifest_path(Path(args.input))
    if generated.exists():
        manifest["generator"] = read_json(generated)
    write_manifest(manifest, out_dir)

    print(f"已划分 {len(events)} 个事件 -> {out_dir}")
    for task in tasks:
        print(
            f"  任务 {task.task_id} {task.speed_range.label():<22} {len(task):>5} "
            f"(train {len(task.train)}, val {len(task.val)}, test {len(task.test)})"
        )
    return 0


def _train_method(
    cfg: TrainConfig,
    tasks: Sequence[TaskSet],
    out_dir: Path,
    jobs: int,
    reuse: Optional[CurriculumResult] = None,
) -> CurriculumResult:
    """训练一个方法并写出检查点、历史与有效配置"""
    result = Trainer(cfg, jobs).run_curriculum(tasks, reuse)
    for ckpt in result.checkpoints:
        save_checkpoint(ckpt, out_dir)
    write_history(result.history, out_dir / HISTORY_CSV)
    run_config = out_dir / RUN_CONFIG
    try:
        run_config.write_text(yaml.safe_dump(cfg.to_flat(), sort_keys=True), encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"cannot write {run_config}: {e}", str(run_config))
    return result


def train(args: argparse.Namespace, settings: Settings) -> int:
    """train 子命令"""
    cfg = build_train_config(args, settings)
    tasks = load_tasks(args.tasks_dir, cfg.horizon)
    result = _train_method(cfg, tasks, args.out_dir, settings.jobs)
    print(f"{cfg.method.value} 训练完成 -> {args.out_dir}")
    for ckpt in result.checkpoints:
        print(f"  {ckpt.filename}")
    return 0


def _discover(checkpoints_dir: Path) -> List[Checkpoint]:
    checkpoints = discover_checkpoints(checkpoints_dir)
    if not checkpoints:
        raise MissingArtifactError(f"no checkpoints found in {checkpoints_dir}", str(checkpoints_dir))
    return checkpoints


def _emit_report(
    args: argparse.Namespace, settings: Settings, reuse_matrix: bool
) -> int:
    checkpoints = _discover(args.checkpoints_dir)
    horizon = max(ckpt.params.horizon for ckpt in checkpoints)
    tasks = load_tasks(args.tasks_dir, horizon)
    dt = _tasks_dt(tasks)

    existing = Path(args.out_dir) / MATRIX_CSV
    if reuse_matrix and existing.exists():
        matrix = read_matrix(existing)
    else:
        matrix = build_stage_matrix(checkpoints, tasks, dt, settings.jobs)
    written = render_report(matrix, args.out_dir, tasks, checkpoints, dt, resolve_seed(args, settings))

    print(f"报告 -> {written[REPORT_MD]}")
    for summary in final_summary(matrix):
        print(
            f"  {summary.method.value:<9} MSE spacing {summary.mean_mse_spacing:.4f}  "
            f"MSE speed {summary.mean_mse_speed:.4f}  collision {summary.mean_collision_rate:.2f}%"
        )
    return 0


def evaluate(args: argparse.Namespace, settings: Settings) -> int:
    """evaluate 子命令：重新评估全部检查点"""
    return _emit_report(args, settings, reuse_matrix=False)


def report(args: argparse.Namespace, settings: Settings) -> int:
    """report 子命令：优先复用已有的 stage_matrix.csv"""
    return _emit_report(args, settings, reuse_matrix=True)


def repro(args: argparse.Namespace, settings: Settings) -> int:
    """repro 子命令：generate → split → 四个方法训练 → evaluate → 运行清单"""
    logger = get_logger("driftfollow")
    started = time.perf_counter()
    seed = resolve_seed(args, settings)
    root: Path = args.out_dir
    base = build_train_config(args, settings)
    events_path = root / "events.jsonl"
    tasks_dir = root / "tasks"
    train_dir = root / "train"
    report_dir = root / "report"

    logger.info(f"Reproduction run with seed {seed} into {root}")
    generate(
        argparse.Namespace(
            count=args.count, regimes=",".join(REGIMES), dt=base.dt, seed=seed, out=events_path
        ),
        settings,
    )
    split(
        argparse.Namespace(input=events_path, seed=seed, horizon=base.horizon, out_dir=tasks_dir),
        settings,
    )
    tasks = load_tasks(tasks_dir, base.horizon)
    # baseline 的阶段 1 与 EWC / MAS 相同，只训练一次
    sequential: Optional[CurriculumResult] = None
    for method in METHOD_ORDER:
        cfg = TrainConfig.from_mapping({**base.model_dump(), "method": method})
        logger.info(f"Training {method.value}")
        result = _train_method(cfg, tasks, train_dir / method.value, settings.jobs, sequential)
        if method is Method.BASELINE:
            sequential = result
    code = evaluate(
        argparse.Namespace(
            tasks_dir=tasks_dir, checkpoints_dir=train_dir, out_dir=report_dir, seed=seed
        ),
        settings,
    )

    check = retention_check(read_matrix(report_dir / MATRIX_CSV))
    elapsed = time.perf_counter() - started
    manifest = {
        "seed": seed,
        "count": args.count,
        "jobs": settings.jobs,
        "config": {k: v for k, v in base.to_flat().items() if k not in ("method", "reg_lambda")},
        "reg_lambda": {
            m.value: base.model_copy(update={"method": m}).reg.reg_lambda
            for m in (Method.EWC, Method.MAS)
        },
        "regime_profiles": read_json(manifest_path(events_path))["regime_profiles"],
        "retention_check": check.summary(),
        "elapsed_seconds": round(elapsed, 1),
    }
    write_json(manifest, root / REPRO_MANIFEST)
    print(
        f"遗忘检查: {'通过' if check.passed else '未通过'} "
        f"(用时 {elapsed / 60.0:.1f} 分钟) -> {root / REPRO_MANIFEST}"
    )
    return code


COMMANDS: Dict[str, Callable[[argparse.Namespace, Settings], int]] = {
    "generate": generate,
    "split": split,
    "train": train,
    "evaluate": evaluate,
    "report": report,
    "repro": repro,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数，返回退出码"""
    args = parse_args(argv)
    logger = None
    try:
        settings = load_settings(args)
        setup_logger(settings)
        logger = get_logger("driftfollow")
        logger.debug(f"Running {args.command} (jobs {settings.jobs})")
        return COMMANDS[args.command](args, settings)
    except DriftFollowException as e:
        if logger:
            logger.error(f"{args.command} failed: {e.message}")
        print(f"错误: {e.message}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("\n已中断", file=sys.stderr)
        return 130


def cli() -> None:
    """命令行入口点"""
    sys.exit(main())


if __name__ == "__main__":
    cli()
