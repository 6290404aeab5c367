import os
import sys
import tempfile
import unittest

import numpy as np
import pandas as pd

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import settings
from errors import DomainError
from model import TrainConfig, train_stack, validation_error
from sweep import SweepGrid, SweepRunner, STANDARD_GRIDS, SWEEP_COLUMNS, FAILED


def _config(**overrides):
    values = {'train.layer_sizes': (20, 10), 'train.epochs': 2, 'train.batch_size': 4,
              'imaging.work_width': 2, 'imaging.work_height': 2, 'seed': 5}
    values.update(overrides)
    return settings.init(overrides=values)


def _joint(n, seed=0):
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.random((n, 8)), np.ones(n)])


class TestSweepGrid(unittest.TestCase):
    """测试扫描网格"""

    def test_standard_grids(self):
        self.assertEqual(STANDARD_GRIDS['epochs'], (5, 50, 250))
        self.assertEqual(SweepGrid('batch_size').values, [10, 50, 100, 200])
        self.assertEqual(len(SweepGrid('depth')), 3)

    def test_invalid(self):
        with self.assertRaises(DomainError):
            SweepGrid('colour')
        with self.assertRaises(DomainError):
            SweepGrid('epochs', [5, 0])

    def test_leg_configs_change_one_axis(self):
        base = _config()
        depth = SweepGrid('depth', [1, 3]).leg_config(base, 1)
        self.assertEqual(depth['train.layer_sizes'], (20, 20, 20))
        self.assertEqual(depth.seed, 5 ^ 1)
        units = SweepGrid('hidden_units', [7]).leg_config(base, 0)
        self.assertEqual(units['train.layer_sizes'], (7, 7))
        self.assertEqual(units.seed, 5)
        batch = SweepGrid('batch_size', [10, 3]).leg_config(base, 1)
        self.assertEqual(batch['train.batch_size'], 3)
        self.assertEqual(batch['train.layer_sizes'], base['train.layer_sizes'])
        self.assertEqual(batch['train.epochs'], base['train.epochs'])

    def test_from_config(self):
        grid = SweepGrid.from_config(_config(**{'sweep.axis': 'depth', 'sweep.values': (1, 2)}))
        self.assertEqual((grid.axis, grid.values), ('depth', [1, 2]))


class TestSweepRunner(unittest.TestCase):
    """测试扫描执行"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_single_leg_matches_direct_training(self):
        config = _config()
        train, val = _joint(12), _joint(4, seed=1)
        grid = SweepGrid('epochs', [2])
        rows, failed = SweepRunner(config).run(grid, train, val, self.tmp.name)
        self.assertEqual(failed, 0)
        model, _ = train_stack(train, (20, 10), TrainConfig.from_pipeline(config), validation=val)
        self.assertEqual(rows[0]['val_rms'], validation_error(model, val))
        self.assertTrue(os.path.exists(os.path.join(self.tmp.name, 'sweep', 'leg_00_epochs_2.conf')))

    def test_rows_in_grid_order(self):
        rows, failed = SweepRunner(_config()).run(SweepGrid('batch_size', [6, 2, 4]), _joint(12), None,
                                                  self.tmp.name)
        self.assertEqual(failed, 0)
        self.assertEqual([row['value'] for row in rows], [6, 2, 4])
        self.assertTrue(all(np.isnan(row['val_rms']) for row in rows))
        path = SweepRunner(_config()).write_csv(rows, os.path.join(self.tmp.name, 'sweep.csv'))
        df = pd.read_csv(path, float_precision='round_trip')
        self.assertEqual(list(df.columns), SWEEP_COLUMNS)
        self.assertEqual(list(df['value']), [6, 2, 4])
        self.assertTrue(df['val_rms'].isna().all())
        self.assertEqual(list(df['train_rms']), [row['train_rms'] for row in rows])

    def test_failed_leg(self):
        # 数据宽度与工作尺寸不符，每个扫描点都会失败
        runner = SweepRunner(_config(**{'imaging.work_width': 3}))
        rows, failed = runner.run(SweepGrid('epochs', [1, 2]), _joint(6), None, self.tmp.name)
        self.assertEqual(failed, 2)
        self.assertEqual(rows[0]['val_rms'], FAILED)
        path = runner.write_csv(rows, os.path.join(self.tmp.name, 'sweep.csv'))
        with open(path, encoding='utf-8') as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], ','.join(SWEEP_COLUMNS))
        self.assertTrue(lines[1].startswith('epochs,1,FAILED,FAILED,'))


if __name__ == '__main__':
    unittest.main()
