"""
Data Manager for LowRankQ
Handles CSV results, model files and the SQLite run registry
"""

import sqlite3
import json
import os
from typing import Dict, List, Optional, Any, Tuple
from datetime import datetime
import logging

import pandas as pd

from ..learners.config import LearnerConfig
from ..learners.models import ValueModel
from ..learners import persistence
from ..utils.config import Config
from ..utils.errors import ConfigError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


class DataManager:
    """Manages result storage and retrieval inside one output directory"""

    def __init__(self, out_dir: Optional[str] = None):
        """Initialize the data manager"""
        self.out_dir = Config.get_output_dir(out_dir)
        self.db_path = Config.get_database_path(self.out_dir)
        self._init_database()

    def _init_database(self):
        """Initialize the SQLite database with the run registry"""
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()

            cursor.execute('''
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    experiment TEXT,
                    run_index INTEGER,
                    seed INTEGER,
                    diverged INTEGER,
                    wall_seconds REAL,
                    model_path TEXT,
                    config TEXT,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    UNIQUE (experiment, run_index)
                )
            ''')

            conn.commit()

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def save_csv(self, frame: pd.DataFrame, name: str) -> str:
        """Write a frame behind the schema comment; floats use a fixed round-trip format"""
        path = self.path(name)
        with open(path, 'w', newline='') as fh:
            fh.write(f"# schema={Config.CSV_SCHEMA_VERSION}\n")
            frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        logger.debug(f"Wrote {len(frame)} rows to {path}")
        return path

    @staticmethod
    def load_csv(path: str) -> pd.DataFrame:
        with open(path) as fh:
            header = fh.readline().strip()
            expected = f"# schema={Config.CSV_SCHEMA_VERSION}"
            if header != expected:
                raise ConfigError(f"{path} does not start with '{expected}'")
            return pd.read_csv(fh)

    def save_model(self, model: ValueModel, cfg: LearnerConfig, name: str,
                   metadata: Optional[Dict[str, Any]] = None) -> str:
        os.makedirs(self.path('models'), exist_ok=True)
        path = os.path.join(self.out_dir, 'models', name + Config.MODEL_SUFFIX)
        persistence.save_model(path, model, cfg, metadata)
        return path

    @staticmethod
    def load_model(path: str) -> Tuple[ValueModel, LearnerConfig, Dict[str, Any]]:
        return persistence.load_model(path)

    def save_json(self, data: Dict[str, Any], name: str) -> str:
        path = self.path(name)
        with open(path, 'w') as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    def load_json(self, name: str) -> Dict[str, Any]:
        with open(self.path(name)) as fh:
            return json.load(fh)

    def register_run(self, experiment: str, run_index: int, seed: int, diverged: bool,
                     wall_seconds: float, model_path: str, config: Dict[str, Any]):
        """Record a finished run; re-training into the same directory replaces the row.

        model_path is stored relative to the output directory.
        """
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()

            cursor.execute('''
                INSERT OR REPLACE INTO runs
                (experiment, run_index, seed, diverged, wall_seconds, model_path, config, created_at)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            ''', (
                experiment,
                run_index,
                seed,
                int(diverged),
                wall_seconds,
                model_path,
                json.dumps(config, sort_keys=True),
                datetime.now()
            ))

            conn.commit()

    def get_runs(self, experiment: Optional[str] = None) -> List[Dict[str, Any]]:
        """Get registered runs ordered by run index"""
        with sqlite3.connect(self.db_path) as conn:
            conn.row_factory = sqlite3.Row
            cursor = conn.cursor()

            if experiment:
                cursor.execute('SELECT * FROM runs WHERE experiment = ? ORDER BY run_index', (experiment,))
            else:
                cursor.execute('SELECT * FROM runs ORDER BY experiment, run_index')

            rows = [dict(row) for row in cursor.fetchall()]
            for row in rows:
                row['config'] = json.loads(row['config'])
                row['diverged'] = bool(row['diverged'])
            return rows

    def get_model_path(self, experiment: str, run_index: int = 0) -> Optional[str]:
        with sqlite3.connect(self.db_path) as conn:
            cursor = conn.cursor()

            cursor.execute('SELECT model_path FROM runs WHERE experiment = ? AND run_index = ?',
                           (experiment, run_index))
            result = cursor.fetchone()

            return os.path.join(self.out_dir, result[0]) if result else None
