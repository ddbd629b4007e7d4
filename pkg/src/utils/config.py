"""
Configuration management for LowRankQ
"""

import os
from typing import Tuple
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Configuration class for LowRankQ"""

    # Storage
    DATA_DIR = os.getenv('LOWRANKQ_DATA_DIR', 'data')
    DATABASE_NAME = os.getenv('LOWRANKQ_DATABASE', 'runs.db')
    LOG_LEVEL = os.getenv('LOWRANKQ_LOG_LEVEL', 'INFO')

    # Long pendulum acceptance runs
    RUN_SLOW = os.getenv('LOWRANKQ_RUN_SLOW', '0') == '1'

    # Output formats
    CSV_SCHEMA_VERSION = 1
    MODEL_SUFFIX = ".model"

    # Numerics
    DIVERGENCE_THRESHOLD = 1e12
    POLICY_ITERATION_CAP = 10_000
    EVALUATION_MAX_ITERS = 100_000
    TIE_TOLERANCE = 1e-10

    # Exploration schedule defaults (epsilon_0, multiplicative decay, floor)
    EPSILON_START = 1.0
    EPSILON_DECAY = 0.999
    EPSILON_MIN = 0.05

    # Experiment defaults
    DEFAULT_EVAL_EVERY = 10
    DEFAULT_EVAL_EPISODES = 5
    DEFAULT_SEED = 0

    # Spectrum analysis
    SVD_ENERGIES: Tuple[float, ...] = (0.9, 0.99)

    # PARAFAC sweeps
    ALS_MAX_ITERS = 500
    ALS_TOLERANCE = 1e-12
    ALS_RESTARTS = 3

    @classmethod
    def validate_config(cls) -> bool:
        """Validate configuration values; output directories are created on first use"""
        if cls.DIVERGENCE_THRESHOLD <= 0:
            raise ValueError("DIVERGENCE_THRESHOLD must be positive")

        if not 0.0 <= cls.EPSILON_MIN <= cls.EPSILON_START <= 1.0:
            raise ValueError("Exploration defaults must satisfy 0 <= min <= start <= 1")

        if cls.LOG_LEVEL.upper() not in {'DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'}:
            raise ValueError(f"Unknown log level: {cls.LOG_LEVEL}")

        return True

    @classmethod
    def get_database_path(cls, out_dir: str = None) -> str:
        """Get the run registry path inside an output directory"""
        return os.path.join(out_dir or cls.DATA_DIR, cls.DATABASE_NAME)

    @classmethod
    def get_output_dir(cls, out_dir: str = None) -> str:
        """Resolve and create an output directory"""
        path = out_dir or cls.DATA_DIR
        os.makedirs(path, exist_ok=True)
        return path
