import os
import sys
import tempfile
import unittest

import numpy as np

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError, ModeError
from imaging import UltrasoundFrame, read_contour, list_contours
from inference import ExtractionConfig, ContourExtractor, extract_contour, reconstruct_contour_image
from model import Rbm, DeepAutoencoder, JOINT, TRANSLATIONAL


def _zero_model(dims=(33, 30), hidden=4, mode=TRANSLATIONAL):
    split = dims[0] * dims[1]
    bottom = Rbm(np.zeros((hidden, 2 * split + 1)), np.zeros(hidden), np.zeros(2 * split + 1), True)
    trbm = None
    if mode == TRANSLATIONAL:
        trbm = Rbm(np.zeros((hidden, split + 1)), np.zeros(hidden), np.zeros(split + 1), True)
    return DeepAutoencoder([bottom], mode, trbm).validate()


class TestExtractContour(unittest.TestCase):
    """测试逐列重心提取"""

    def test_one_hot_column(self):
        image = np.zeros((30, 33))
        image[7, 4] = 1.0
        points = extract_contour(image)
        self.assertTrue(np.array_equal(points.points, [[4.0, 7.0]]))

    def test_weighted_mean(self):
        image = np.zeros((10, 3))
        image[4, 1] = image[6, 1] = 0.4
        points = extract_contour(image)
        self.assertTrue(np.allclose(points.points, [[1.0, 5.0]]))

    def test_all_below_threshold(self):
        points = extract_contour(np.full((30, 33), 0.2))
        self.assertFalse(points.valid)

    def test_min_column_mass(self):
        image = np.zeros((10, 2))
        image[3, 0] = 0.35
        image[3, 1] = 0.9
        points = extract_contour(image, ExtractionConfig(mask_threshold=0.3, min_column_mass=0.5))
        self.assertTrue(np.array_equal(points.xs, [1.0]))

    def test_threshold_monotone(self):
        image = np.random.default_rng(0).random((30, 33))
        counts = [len(extract_contour(image, ExtractionConfig(mask_threshold=t, min_column_mass=0.0)))
                  for t in (0.1, 0.5, 0.9, 0.99)]
        self.assertEqual(counts, sorted(counts, reverse=True))

    def test_upscale(self):
        image = np.zeros((30, 33))
        image[15, 3] = 1.0
        points = extract_contour(image, original_dims=(330, 300))
        self.assertTrue(np.allclose(points.points, [[30.0, 150.0]]))

    def test_invalid_config(self):
        with self.assertRaises(DomainError):
            extract_contour(np.zeros((3, 3)), ExtractionConfig(mask_threshold=1.5))


class TestReconstruction(unittest.TestCase):
    """测试轮廓图重建"""

    def test_zero_model_gives_half(self):
        recon = reconstruct_contour_image(_zero_model(), np.random.default_rng(1).random((30, 33)))
        self.assertEqual(recon.shape, (30, 33))
        self.assertTrue(np.all(recon == 0.5))
        points = extract_contour(recon)
        self.assertEqual(len(points), 33)
        self.assertTrue(np.allclose(points.ys, 14.5))

    def test_joint_model_rejected(self):
        model = _zero_model(mode=JOINT)
        with self.assertRaises(ModeError):
            reconstruct_contour_image(model, np.zeros((30, 33)))
        with self.assertRaises(ModeError):
            ContourExtractor(model)

    def test_wrong_size(self):
        with self.assertRaises(DomainError):
            reconstruct_contour_image(_zero_model(), np.zeros((33, 30)))


class TestContourExtractor(unittest.TestCase):
    """测试批量提取"""

    def test_writes_files(self):
        extractor = ContourExtractor(_zero_model(), ExtractionConfig())
        frames = [UltrasoundFrame(np.full((60, 66), 0.3), frame_index=i) for i in (2, 5)]
        with tempfile.TemporaryDirectory() as tmp:
            results = extractor.extract_frames(frames, os.path.join(tmp, 'dl'), overlay_dir=os.path.join(tmp, 'ov'))
            self.assertEqual(sorted(results), [2, 5])
            files = list_contours(os.path.join(tmp, 'dl'))
            self.assertEqual(sorted(files), [2, 5])
            points = read_contour(files[2])
            self.assertEqual(len(points), 33)
            self.assertEqual(len(os.listdir(os.path.join(tmp, 'ov'))), 2)

    def test_empty_contour_file(self):
        extractor = ContourExtractor(_zero_model(), ExtractionConfig(mask_threshold=0.6))
        with tempfile.TemporaryDirectory() as tmp:
            results = extractor.extract_frames([UltrasoundFrame(np.zeros((30, 33)))], tmp)
            self.assertFalse(results[0].valid)
            self.assertFalse(read_contour(list_contours(tmp)[0]).valid)

    def test_roi_offset(self):
        extractor = ContourExtractor(_zero_model(), roi=(10, 20, 33, 30))
        points = extractor.extract_frame(UltrasoundFrame(np.zeros((60, 50))))
        self.assertTrue(np.allclose(points.xs, np.arange(33) + 10))
        self.assertTrue(np.allclose(points.ys, 14.5 + 20))


if __name__ == '__main__':
    unittest.main()
