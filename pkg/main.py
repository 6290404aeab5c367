# -*- encoding: UTF-8 -*-

import argparse
import os
import sys
import traceback
from collections import OrderedDict

import settings
from errors import PipelineError, ConfigError
from logger_manager import LoggerManager

COMMANDS = ('synth', 'autolabel', 'train', 'translate', 'extract', 'eval', 'sweep')
BLAS_THREAD_VARS = ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS')


def use_single_thread(logger):
    """
    确定性模式：矩阵运算单线程
    线程数在 numpy 载入时确定，已载入时只对之后启动的子进程生效
    """
    for var in BLAS_THREAD_VARS:
        os.environ[var] = '1'
    if 'numpy' in sys.modules:
        logger.warning("numpy 已载入，单线程设置只对扫描子进程生效")


def _seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"不是整数: {text!r}")
    if not 0 <= value <= settings.SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed 必须是64位无符号整数: {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog='tongue-contour',
                                     description='超声舌轮廓提取：合成、自动标注、训练、提取与评估')
    parser.add_argument('--config', help='配置文件（key = value）')
    parser.add_argument('--seed', type=_seed, help='主随机种子')
    parser.add_argument('--out', help='输出目录')
    parser.add_argument('--deterministic', action='store_true', help='单线程矩阵运算，保证逐位可复现')
    parser.add_argument('--set', action='append', default=[], metavar='KEY=VALUE', help='覆盖任意配置项')

    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('synth', help='生成合成序列与清单')
    sub.add_parser('autolabel', help='Ref 自动标注')
    sub.add_parser('train', help='训练联合模式堆叠')
    sub.add_parser('translate', help='训练 tRBM')
    sub.add_parser('extract', help='在测试帧上提取 DL 轮廓')
    eval_parser = sub.add_parser('eval', help='计算 MSD 比较报告')
    eval_parser.add_argument('--mm-per-px', type=float, help='像素到毫米的换算系数（默认 0.35）')
    sweep_parser = sub.add_parser('sweep', help='单轴超参数扫描')
    sweep_parser.add_argument('--axis', choices=settings.CHOICES['sweep.axis'], help='扫描轴')
    sweep_parser.add_argument('--values', help='逗号分隔的取值，缺省为该轴的标准网格')
    sweep_parser.add_argument('--workers', type=int, help='并行进程数')
    return parser


def collect_overrides(args):
    """命令行参数 -> 配置覆盖项"""
    overrides = OrderedDict()
    for text in args.set:
        key, value = settings.parse_override(text)
        overrides[key] = value
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.out:
        overrides['paths.output_dir'] = args.out
    if getattr(args, 'mm_per_px', None) is not None:
        overrides['eval.mm_per_px'] = settings.parse_value('eval.mm_per_px', str(args.mm_per_px))
    if getattr(args, 'axis', None):
        overrides['sweep.axis'] = args.axis
    if getattr(args, 'values', None):
        overrides['sweep.values'] = settings.parse_value('sweep.values', args.values)
    if getattr(args, 'workers', None) is not None:
        overrides['sweep.workers'] = args.workers
    return overrides


def run_command(workflow, command):
    """执行子命令，返回退出码"""
    if command == 'synth':
        workflow.run_synth()
    elif command == 'autolabel':
        workflow.run_autolabel()
    elif command == 'train':
        workflow.run_train()
    elif command == 'translate':
        workflow.run_translate()
    elif command == 'extract':
        workflow.run_extract()
    elif command == 'eval':
        workflow.run_eval()
    elif command == 'sweep':
        failed = workflow.run_sweep()
        return 1 if failed else 0
    return 0


def main(argv=None):
    """主函数"""
    args = build_parser().parse_args(argv)
    logger_manager = LoggerManager()
    logger = logger_manager.get_logger("main")
    if args.deterministic:
        use_single_thread(logger)
    # 在设置线程数之后才导入 numpy 相关模块
    from work_flow import WorkFlow
    try:
        config = settings.init(args.config, collect_overrides(args))
        logger_manager = LoggerManager(config['paths.output_dir'])
        logger = logger_manager.get_logger("main")
        logger.info(f"执行 {args.command}: {config}")

        workflow = WorkFlow(config, logger_manager=logger_manager)
        workflow.write_echo()
        code = run_command(workflow, args.command)
        if code == 0:
            logger.info(f"{args.command} 成功完成")
        else:
            logger.error(f"{args.command} 部分失败")
        return code

    except ConfigError as e:
        logger.error(f"配置错误: {str(e)}")
        return e.exit_code
    except PipelineError as e:
        logger.error(f"{args.command} 失败: {str(e)}")
        logger.debug(traceback.format_exc())
        return e.exit_code
    except Exception as e:
        logger.error(f"系统运行出错: {str(e)}")
        logger.error(traceback.format_exc())
        return 1


if __name__ == "__main__":
    sys.exit(main())
