# -*- encoding: UTF-8 -*-

import os
import time

import numpy as np
import pandas as pd
from colorama import init, Fore
from tqdm import tqdm

import utils
from autolabel import LabelConfig, RefLabeler
from errors import DomainError, ModeError, MissingArtifactError
from evaluation import (compare, comparable_quality, literature_mm, PUBLISHED_PAIR_MSD_MM,
                        PUBLISHED_LITERATURE_MSD_MM)
from imaging import (load_pgm, read_contour, write_contour, rasterize_contour, shift_points,
                     assemble_joint, joint_size, us_part, contour_path, list_contours, mm_per_px_from_extent)
from inference import ExtractionConfig, ContourExtractor, working_frame
from logger_manager import LoggerManager
from model import (TrainConfig, StackTrainer, TranslationalTrainer, JOINT, save_model, load_model,
                   progress_line)
from numerics import derive_seed
from sweep import SweepGrid, SweepRunner
from synth import SynthConfig, SequenceSynthesizer

# 初始化colorama，确保在Windows上也能正常显示颜色
init(autoreset=True)

TRANSLATE_SALT = 100


def print_progress(phase, epoch, train_value, val_value):
    """结构化进度行，始终输出到标准输出"""
    print(progress_line(phase, epoch, val_value), flush=True)


class WorkFlow:
    """工作流程类：每个子命令对应一个 run_* 方法"""

    def __init__(self, config, logger_manager=None, progress=print_progress):
        self.config = config
        self.logger_manager = logger_manager or LoggerManager()
        self.logger = self.logger_manager.get_logger("workflow")
        self.progress = progress

        self.data_dir = config['paths.data_dir']
        self.output_dir = config['paths.output_dir']
        self.stem = config['imaging.stem']
        self.dims = config.work_dims
        self.roi = tuple(config['imaging.roi'])
        self.mm_per_px = config['eval.mm_per_px']

    # ------------------------------------------------------------ 路径

    @property
    def manifest_path(self):
        return os.path.join(self.data_dir, 'manifest.txt')

    @property
    def truth_dir(self):
        return os.path.join(self.data_dir, 'truth')

    @property
    def ref_dir(self):
        return os.path.join(self.data_dir, 'ref')

    @property
    def dl_dir(self):
        return os.path.join(self.data_dir, 'dl')

    @property
    def overlay_dir(self):
        return os.path.join(self.data_dir, 'overlay')

    @property
    def model_path(self):
        return self.config['paths.model_path'] or os.path.join(self.output_dir, 'joint.trb')

    @property
    def trbm_path(self):
        return self.config['paths.trbm_path'] or os.path.join(self.output_dir, 'translational.trb')

    def output_path(self, filename):
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, filename)

    def write_echo(self):
        """写出有效配置，重新读取可复现本次运行"""
        return self.config.write_echo(self.output_path('effective.conf'))

    # ------------------------------------------------------------ 数据

    def read_manifest(self):
        return utils.read_manifest(self.manifest_path)

    def split_rows(self, manifest, split):
        return manifest[manifest['split'] == split]

    def load_frame(self, row):
        path = utils.require(row['frame'], 'frame')
        return load_pgm(path, mm_per_px=self.mm_per_px, frame_index=int(row['index']))

    def load_frames(self, manifest, splits=None):
        rows = manifest if splits is None else manifest[manifest['split'].isin(splits)]
        return [self.load_frame(row) for _, row in tqdm(rows.iterrows(), total=len(rows),
                                                        desc="读取帧", unit="帧", ncols=100)]

    def joint_example(self, frame, points):
        """一帧与其 Ref 轮廓 -> 联合向量"""
        work = working_frame(frame, self.roi, self.dims)
        if self.roi:
            x, y, w, h = self.roi
            points = shift_points(points, -x, -y)
            from_dims = (w, h)
        else:
            from_dims = frame.dims
        raster = rasterize_contour(points, self.dims[0], self.dims[1], from_dims=from_dims,
                                   thickness=self.config['imaging.contour_thickness'])
        return assemble_joint(work, raster, self.dims)

    def build_joint_dataset(self, manifest, split):
        """
        构造某个划分的联合样本矩阵
        :return: (N, 2*w*h+1) 数组，N 为 0 时返回 None
        """
        rows = self.split_rows(manifest, split)
        if rows.empty:
            return None
        refs = list_contours(self.ref_dir)
        examples = []
        for _, row in tqdm(rows.iterrows(), total=len(rows), desc=f"构造 {split} 样本", unit="帧", ncols=100):
            index = int(row['index'])
            if index not in refs:
                raise MissingArtifactError('ref contours', contour_path(self.ref_dir, self.stem, index))
            examples.append(self.joint_example(self.load_frame(row), read_contour(refs[index])))
        return np.vstack(examples)

    def write_reports(self, reports, filename, layered=True):
        frames = []
        for k, report in enumerate(reports):
            df = report.to_frame()
            if layered:
                df.insert(1, 'layer', k + 1)
            frames.append(df)
        path = self.output_path(filename)
        pd.concat(frames, ignore_index=True).to_csv(path, index=False, lineterminator='\n')
        return path

    # ------------------------------------------------------------ 子命令

    def run_synth(self):
        """生成合成序列"""
        cfg = SynthConfig.from_settings(self.config.section('synth'), self.config.seed)
        manifest = SequenceSynthesizer(self.logger_manager).write(
            cfg, self.data_dir, stem=self.stem,
            test_frames=self.config['synth.test_frames'],
            validation_fraction=self.config['synth.validation_fraction'],
            mm_per_px=self.mm_per_px, echo=self.config.echo())
        utils.print_summary("合成完成", [("清单", manifest), ("帧数", cfg.frames),
                                         ("尺寸", f"{cfg.width}x{cfg.height}")])
        return manifest

    def run_autolabel(self):
        """整段序列按帧序号顺序自动标注，写出 Ref 轮廓"""
        manifest = self.read_manifest()
        frames = self.load_frames(manifest)
        labeler = RefLabeler(LabelConfig.from_settings(self.config.section('label')), self.logger_manager)
        contours = labeler.label_sequence(frames)
        os.makedirs(self.ref_dir, exist_ok=True)
        for frame, points in zip(frames, contours):
            write_contour(points, contour_path(self.ref_dir, self.stem, frame.frame_index),
                          comment=f"ref frame {frame.frame_index}")
        coverage_path = os.path.join(self.ref_dir, 'coverage.csv')
        labeler.coverage.to_csv(coverage_path, index=False, lineterminator='\n')
        utils.print_summary("自动标注完成", [
            ("帧数", len(frames)),
            ("平均覆盖率", f"{labeler.coverage['coverage'].mean():.3f}"),
            ("回退列数", int(labeler.coverage['fallback_count'].sum())),
        ])
        return self.ref_dir

    def run_train(self):
        """训练联合模式堆叠"""
        start_time = time.time()
        manifest = self.read_manifest()
        train = self.build_joint_dataset(manifest, 'train')
        if train is None:
            raise DomainError("清单中没有训练帧")
        val = self.build_joint_dataset(manifest, 'val')
        cfg = TrainConfig.from_pipeline(self.config)
        trainer = StackTrainer(cfg, self.logger_manager, self.progress)
        model, reports = trainer.train(train, self.config['train.layer_sizes'], validation=val,
                                       expected_visible=joint_size(self.dims))
        save_model(model, self.model_path)
        report_path = self.write_reports(reports, 'train_report.csv')
        final = reports[-1]
        utils.print_summary("训练完成", [
            ("模型", self.model_path),
            ("结构", model),
            ("训练样本", len(train)),
            ("验证样本", 0 if val is None else len(val)),
            ("最终验证误差", final.final_val),
            ("报告", report_path),
            ("用时", f"{time.time() - start_time:.1f} 秒"),
        ])
        return model, reports

    def load_joint_model(self):
        model = load_model(utils.require(self.model_path, 'joint model'))
        if model.first_layer_mode != JOINT:
            raise ModeError(f"{self.model_path} 不是 joint 模式模型")
        return model

    def run_translate(self):
        """在 joint 模型上训练 tRBM"""
        joint_model = self.load_joint_model()
        manifest = self.read_manifest()
        joint = self.build_joint_dataset(manifest, 'train')
        if joint is None:
            raise DomainError("清单中没有训练帧")
        val = self.build_joint_dataset(manifest, 'val')
        cfg = TrainConfig.from_pipeline(self.config, 'translate', derive_seed(self.config.seed, TRANSLATE_SALT))
        trainer = TranslationalTrainer(cfg, self.logger_manager, self.progress, self.config['translate.init'])
        model, report = trainer.train(joint_model, us_part(joint), joint, validation=val)
        save_model(model, self.trbm_path)
        report_path = self.write_reports([report], 'translate_report.csv', layered=False)
        utils.print_summary("tRBM 训练完成", [
            ("模型", self.trbm_path),
            ("最终损失", report.final_train),
            ("最终验证误差", report.final_val),
            ("报告", report_path),
        ])
        return model, report

    def run_extract(self):
        """在测试帧上提取 DL 轮廓；清单没有测试帧时处理全部帧"""
        model = load_model(utils.require(self.trbm_path, 'translational model'))
        manifest = self.read_manifest()
        splits = ['test'] if (manifest['split'] == 'test').any() else None
        frames = self.load_frames(manifest, splits)
        extractor = ContourExtractor(model, ExtractionConfig.from_settings(self.config.section('extract')),
                                     roi=self.roi, dims=self.dims, logger_manager=self.logger_manager)
        overlay = self.overlay_dir if self.config['extract.overlay'] else None
        results = extractor.extract_frames(frames, self.dl_dir, stem=self.stem, overlay_dir=overlay)
        utils.print_summary("轮廓提取完成", [
            ("帧数", len(results)),
            ("空轮廓", sum(1 for points in results.values() if not points.valid)),
            ("输出", self.dl_dir),
        ])
        return results

    def comparison_pairs(self):
        """比较组：有真值时加入 Truth，有人工标注时加入 Hand"""
        for artifact, directory in (('ref contours', self.ref_dir), ('dl contours', self.dl_dir)):
            if not list_contours(directory):
                raise MissingArtifactError(artifact, directory)
        pairs = []
        if list_contours(self.truth_dir):
            pairs += [('Truth vs Ref', self.truth_dir, self.ref_dir),
                      ('Truth vs DL', self.truth_dir, self.dl_dir)]
        pairs.append(('Ref vs DL', self.ref_dir, self.dl_dir))
        hand_dir = self.config['paths.hand_dir']
        if hand_dir:
            if not list_contours(hand_dir):
                raise MissingArtifactError('hand contours', hand_dir)
            pairs += [('Hand vs Ref', hand_dir, self.ref_dir), ('Hand vs DL', hand_dir, self.dl_dir)]
        return pairs

    def run_eval(self):
        """逐帧计算 MSD 并写出比较报告"""
        manifest = self.read_manifest()
        test = self.split_rows(manifest, 'test')
        frames = list(test['index']) if not test.empty else None
        self.calibrate(manifest)
        report = compare(self.comparison_pairs(), self.mm_per_px, frames=frames)
        path = report.write_csv(self.output_path('report.csv'))

        items = []
        for label, avg_px, avg_mm, count, excluded in report.summary():
            shown = 'n/a' if avg_mm is None else f"{avg_mm:.3f} mm ({avg_px:.3f} px)"
            published = PUBLISHED_PAIR_MSD_MM.get(label)
            if published is not None:
                shown += f"，文献 {published} mm"
            items.append((label, f"{shown}，{count} 帧，排除 {excluded}"))
        utils.print_summary(f"比较报告 ({self.mm_per_px} mm/px)", items)

        dl_px, ref_px = report.average_px('Truth vs DL'), report.average_px('Truth vs Ref')
        if dl_px is not None and ref_px is not None:
            if comparable_quality(dl_px, ref_px):
                self.logger.info(f"DL 与 Ref 质量相当: DL {dl_px:.3f} px，Ref {ref_px:.3f} px")
            else:
                self.logger.warning(f"DL 明显差于 Ref: DL {dl_px:.3f} px，Ref {ref_px:.3f} px")
        utils.print_summary("文献对照 (0.295 mm/px)", self.literature_summary(report))
        print(f"{Fore.CYAN}报告已写出: {path}")
        return report

    def calibrate(self, manifest):
        """eval.extent_mm 大于 0 时，按原始帧宽度换算 mm/px，覆盖 eval.mm_per_px"""
        extent = self.config['eval.extent_mm']
        if extent <= 0 or manifest.empty:
            return self.mm_per_px
        width = self.load_frame(manifest.iloc[0]).dims[0]
        self.mm_per_px = mm_per_px_from_extent(extent, width)
        self.logger.info(f"像素标定: {extent} mm / {width} px = {self.mm_per_px:.5f} mm/px")
        return self.mm_per_px

    def literature_summary(self, report):
        """测量值按 0.295 mm/px 换算后与文献值并列"""
        items = []
        for label in ('Truth vs Ref', 'Truth vs DL', 'Ref vs DL'):
            avg_px = report.average_px(label)
            if avg_px is not None:
                items.append((label, f"{literature_mm(avg_px):.3f} mm"))
        items += [(f"文献 {name}", f"{value} mm") for name, value in PUBLISHED_LITERATURE_MSD_MM.items()]
        return items

    def run_sweep(self, grid=None):
        """
        单轴超参数扫描
        :return: 失败的扫描点数
        """
        grid = grid or SweepGrid.from_config(self.config)
        manifest = self.read_manifest()
        train = self.build_joint_dataset(manifest, 'train')
        if train is None:
            raise DomainError("清单中没有训练帧")
        val = self.build_joint_dataset(manifest, 'val')
        runner = SweepRunner(self.config, self.logger_manager)
        rows, failed = runner.run(grid, train, val, self.output_dir)
        path = runner.write_csv(rows, self.output_path('sweep.csv'))
        runner.print_summary(grid, rows)
        if failed:
            self.logger.error(f"扫描完成，{failed}/{len(rows)} 个扫描点失败，结果 {path}")
        else:
            self.logger.info(f"扫描完成: {len(rows)} 个扫描点，结果 {path}")
        return failed
