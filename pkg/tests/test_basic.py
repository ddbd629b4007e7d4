"""
Basic tests for LowRankQ configuration and storage
"""

import unittest
import os
import shutil
import sys
import tempfile
from unittest.mock import patch

import numpy as np
import pandas as pd

# Add project root to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.utils.config import Config
from src.data.data_manager import DataManager
from src.learners.config import LearnerConfig
from src.learners.models import QTable
from src.utils.errors import ConfigError


class TestConfig(unittest.TestCase):
    """Test configuration management"""

    def test_config_validation(self):
        """Invalid log level is rejected"""
        with patch.object(Config, 'LOG_LEVEL', 'LOUD'):
            with self.assertRaises(ValueError):
                Config.validate_config()

    def test_exploration_defaults(self):
        """Default schedule is 1.0 decaying by 0.999 to 0.05"""
        self.assertEqual((Config.EPSILON_START, Config.EPSILON_DECAY, Config.EPSILON_MIN), (1.0, 0.999, 0.05))

    def test_database_path(self):
        """Registry lives inside the output directory"""
        path = Config.get_database_path('some_dir')
        self.assertEqual(path, os.path.join('some_dir', Config.DATABASE_NAME))


class TestDataManager(unittest.TestCase):
    """Test data management"""

    def setUp(self):
        """Set up a scratch output directory"""
        self.out_dir = tempfile.mkdtemp()
        self.data_manager = DataManager(self.out_dir)

    def tearDown(self):
        """Clean up scratch directory"""
        shutil.rmtree(self.out_dir, ignore_errors=True)

    def test_csv_has_schema_header(self):
        frame = pd.DataFrame({'episode': [1, 2], 'value': [0.1, 1.0 / 3.0]})
        path = self.data_manager.save_csv(frame, 'values.csv')

        with open(path) as fh:
            self.assertEqual(fh.readline(), "# schema=1\n")
            self.assertEqual(fh.readline(), "episode,value\n")

        loaded = DataManager.load_csv(path)
        self.assertEqual(list(loaded['episode']), [1, 2])
        self.assertEqual(loaded['value'][1], 1.0 / 3.0)

    def test_csv_without_schema_rejected(self):
        path = os.path.join(self.out_dir, 'raw.csv')
        with open(path, 'w') as fh:
            fh.write("a,b\n1,2\n")
        with self.assertRaises(ConfigError):
            DataManager.load_csv(path)

    def test_save_and_load_model(self):
        model = QTable(np.arange(6.0).reshape(2, 3), (2,), (3,))
        path = self.data_manager.save_model(model, LearnerConfig(kind='qtable'), 'run_000', {'run': 0})

        loaded, cfg, metadata = DataManager.load_model(path)

        np.testing.assert_array_equal(loaded.to_matrix(), model.to_matrix())
        self.assertEqual(cfg.kind, 'qtable')
        self.assertEqual(metadata, {'run': 0})

    def test_register_and_get_runs(self):
        """Test saving and retrieving runs"""
        config = {'name': 'demo'}
        self.data_manager.register_run('demo', 1, 11, False, 2.5, 'models/run_001.model', config)
        self.data_manager.register_run('demo', 0, 10, True, 1.5, 'models/run_000.model', config)

        runs = self.data_manager.get_runs('demo')

        self.assertEqual([r['run_index'] for r in runs], [0, 1])
        self.assertTrue(runs[0]['diverged'])
        self.assertEqual(runs[1]['config'], config)
        self.assertEqual(self.data_manager.get_model_path('demo', 1),
                         os.path.join(self.out_dir, 'models/run_001.model'))

    def test_register_replaces_existing_run(self):
        self.data_manager.register_run('demo', 0, 10, False, 1.0, 'a.model', {})
        self.data_manager.register_run('demo', 0, 10, False, 2.0, 'b.model', {})

        runs = self.data_manager.get_runs()

        self.assertEqual(len(runs), 1)
        self.assertEqual(runs[0]['model_path'], 'b.model')

    def test_missing_run(self):
        self.assertIsNone(self.data_manager.get_model_path('nothing', 0))


if __name__ == '__main__':
    unittest.main()
