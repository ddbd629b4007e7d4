"""
Value-function analyses: singular spectra, PARAFAC sweeps, truncated-SVD
policies and parameter/return tables
"""

import logging
import os
from typing import Dict, List, Optional, Sequence, Any

import numpy as np
import pandas as pd

from ..data.data_manager import DataManager
from ..envs.classic_control import ClassicControlEnv
from ..envs.discretization import DiscretizationGrid
from ..harness.experiment import ExperimentConfig, evaluate_greedy
from ..harness.metrics import ncre
from ..learners.counting import count_parameters
from ..learners.models import QTable, ValueModel
from ..linalg.kernels import cumulative_energy, effective_rank, svd, tsvd
from ..linalg.parafac import parafac_best_of
from ..mdp.tabular_mdp import TabularMdp, bellman_optimality_residual, policy_iteration
from ..utils.config import Config
from ..utils.errors import ConfigError, ZeroNormError

logger = logging.getLogger(__name__)

ALGORITHM_NAMES = {'qtable': 'Q-learning', 'mlr': 'MLR-learning', 'tlr': 'TLR-learning'}


def _energy_column(energy: float) -> str:
    return f"effective_rank_{int(round(energy * 100))}"


class ValueAnalyzer:
    """Analyses over learned or exact Q-functions; every method returns a DataFrame"""

    def __init__(self, energies: Sequence[float] = Config.SVD_ENERGIES):
        self.energies = tuple(energies)

    def analyze_svd(self, q_matrix: np.ndarray) -> pd.DataFrame:
        """Singular values of a state-by-action Q-matrix with cumulative energy and effective ranks"""
        sigma = svd(q_matrix).singular_values
        frame = pd.DataFrame({
            'k': np.arange(1, sigma.size + 1),
            'singular_value': sigma,
            'cumulative_energy': cumulative_energy(sigma),
        })
        for energy in self.energies:
            frame[_energy_column(energy)] = effective_rank(sigma, energy)
        logger.info(f"Spectrum of {q_matrix.shape} Q-matrix: " + ", ".join(
            f"rank@{e}={effective_rank(sigma, e)}" for e in self.energies))
        return frame

    def parafac_sweep(self, tensor: np.ndarray, ranks: Sequence[int], restarts: int = Config.ALS_RESTARTS,
                      max_iters: int = Config.ALS_MAX_ITERS, tol: float = Config.ALS_TOLERANCE,
                      seed: int = 0) -> pd.DataFrame:
        """Normalized fit error of the best-of-restarts ALS fit for each rank"""
        ranks = [int(k) for k in ranks]
        if not ranks:
            raise ConfigError("parafac_sweep needs at least one rank")
        if ranks != sorted(ranks) or len(set(ranks)) != len(ranks):
            raise ConfigError(f"Ranks must be strictly ascending, got {ranks}")

        rows = []
        for k in ranks:
            fit = parafac_best_of(tensor, k, restarts=restarts, max_iters=max_iters, tol=tol, seed=seed)
            errors = np.asarray(fit.errors)
            rose = bool(np.any(errors[1:] > errors[:-1] * (1 + 1e-9) + 1e-15)) if errors.size > 1 else False
            rows.append({
                'rank': k,
                'nfe': fit.nfe,
                'iterations': fit.iterations,
                'converged': int(fit.converged),
                'rank_deficient': int(fit.rank_deficient),
                'error_rose': int(rose),
            })
            logger.info(f"Rank {k}: NFE {fit.nfe:.3e} ({fit.iterations} iterations)")
        return pd.DataFrame(rows)

    def tsvd_policy_test(self, model: ValueModel, env: ClassicControlEnv, grid: DiscretizationGrid,
                         ranks: Sequence[int], episodes: int, seed: int) -> pd.DataFrame:
        """Greedy return of the policy read off tsvd(Q, k), and its NCRE against the full matrix.

        Every rank is evaluated with the same seed as the reference, so a policy
        identical to the reference scores exactly NCRE 0.
        """
        q = model.to_matrix()
        reference = QTable(q, model.state_dims, model.action_dims)
        reference_return, _ = evaluate_greedy(reference, env, grid, episodes, seed)

        rows = []
        for k in ranks:
            truncated = QTable(tsvd(q, int(k)), model.state_dims, model.action_dims)
            greedy_return, greedy_steps = evaluate_greedy(truncated, env, grid, episodes, seed)
            try:
                error = ncre(reference_return, greedy_return)
                defined = 1
            except ZeroNormError:
                logger.warning("Reference return is zero; NCRE undefined")
                error, defined = float('nan'), 0
            rows.append({
                'rank': int(k),
                'greedy_return': greedy_return,
                'greedy_steps': greedy_steps,
                'reference_return': reference_return,
                'ncre': error,
                'ncre_defined': defined,
            })
        return pd.DataFrame(rows)

    @staticmethod
    def solve_mdp(mdp: TabularMdp) -> Dict[str, pd.DataFrame]:
        """Policy iteration; returns the optimal Q-matrix and the greedy policy as frames"""
        policy, q = policy_iteration(mdp)
        q_matrix = mdp.unvec(q)
        q_frame = pd.DataFrame(q_matrix, columns=[f"a{a}" for a in range(mdp.num_actions)])
        q_frame.insert(0, 'state', np.arange(mdp.num_states))
        policy_frame = pd.DataFrame({
            'state': np.arange(mdp.num_states),
            'action': policy.actions,
            'value': q_matrix[np.arange(mdp.num_states), policy.actions],
        })
        logger.info(f"Bellman optimality residual {bellman_optimality_residual(mdp, q):.2e}")
        return {'q': q_frame, 'policy': policy_frame}

    def emit_table(self, result_dirs: Sequence[str]) -> pd.DataFrame:
        """One row per training result directory: setup, parameter count and final median greedy return"""
        rows: List[Dict[str, Any]] = []
        for directory in result_dirs:
            rows.append(self._table_row(directory))
        return pd.DataFrame(rows, columns=[
            'environment', 'algorithm', 'state_resolution', 'action_resolution', 'rank',
            'parameters', 'median_return', 'runs', 'diverged'])

    @staticmethod
    def _table_row(directory: str) -> Dict[str, Any]:
        if not os.path.isdir(directory):
            raise ConfigError(f"No result directory at {directory}")
        manager = DataManager(directory)
        cfg = ExperimentConfig.from_dict(manager.load_json('experiment.json'))
        _, grid, partition = cfg.build()
        learner = cfg.learner

        summary = manager.load_csv(manager.path('summary.csv'))
        runs = manager.load_csv(manager.path('runs.csv'))
        median_return = float(summary['return_median'].iloc[-1]) if len(summary) else float('nan')

        rank: Optional[int] = None if learner.kind == 'qtable' else learner.rank
        parameters = count_parameters(learner.kind, grid.state_buckets, grid.action_buckets, rank or 1,
                                      grouped_dims=partition.grouped_sizes if learner.kind == 'tlr' else None)
        return {
            'environment': cfg.environment,
            'algorithm': ALGORITHM_NAMES[learner.kind],
            'state_resolution': 'x'.join(str(c) for c in grid.state_buckets),
            'action_resolution': 'x'.join(str(c) for c in grid.action_buckets),
            'rank': rank if rank is not None else '',
            'parameters': parameters,
            'median_return': median_return,
            'runs': len(runs),
            'diverged': int(runs['diverged'].sum()),
        }
