"""
End-to-end checks of the exact machinery, the learners and the pendulum comparison

The pendulum comparison trains 20 seeds of three learners for 3000 episodes
and only runs with LOWRANKQ_RUN_SLOW=1.
"""

import unittest
import os
import shutil
import sys
import tempfile
import time

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.analysis.value_analyzer import ValueAnalyzer
from src.data.data_manager import DataManager
from src.harness.experiment import (ExperimentConfig, evaluate_random, run_experiment, summary_frame,
                                    train_frame, eval_frame, runs_frame)
from src.harness.metrics import episodes_to_fraction, median
from src.learners.config import LearnerConfig
from src.learners.counting import count_parameters, parameter_ratio
from src.learners.models import MatrixFactors, TensorFactors
from src.learners.updates import mlr_update, tlr_update
from src.linalg.kernels import effective_rank, svd, tsvd
from src.linalg.parafac import FactorSet, parafac_best_of, reconstruct
from src.mdp.builders import FROZEN_LAKE_4X4, build_gridworld, build_random_mdp
from src.mdp.tabular_mdp import (PolicyMatrix, bellman_optimality_residual, policy_evaluation_exact,
                                 policy_evaluation_iterative, policy_iteration)
from src.utils.config import Config

CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')


def at_least_fraction(value, reference, fraction):
    """value >= fraction of reference, measured from the reference towards zero for negative references"""
    return value >= reference - (1.0 - fraction) * abs(reference)


class TestExactMachinery(unittest.TestCase):

    def test_bellman_exactness(self):
        rng = np.random.default_rng(0)
        started = time.perf_counter()
        for seed in range(50):
            num_states, num_actions = int(rng.integers(2, 21)), int(rng.integers(1, 6))
            mdp = build_random_mdp(num_states, num_actions, float(rng.uniform(0.0, 0.95)), seed=seed)
            policy = PolicyMatrix.uniform(num_states, num_actions)
            np.testing.assert_allclose(policy_evaluation_exact(mdp, policy),
                                       policy_evaluation_iterative(mdp, policy, tol=1e-10), atol=1e-8)
            _, q = policy_iteration(mdp)
            self.assertLess(bellman_optimality_residual(mdp, q), 1e-8)
        self.assertLess(time.perf_counter() - started, 5.0)

    def test_eckart_young(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            m = rng.standard_normal((20, 30))
            sigma = svd(m).singular_values
            for k in range(1, sigma.size + 1):
                self.assertAlmostEqual(np.linalg.norm(m - tsvd(m, k)), np.sqrt(np.sum(sigma[k:] ** 2)), delta=1e-8)

    def test_parafac_recovery(self):
        t = reconstruct(FactorSet.random((8, 8, 8), 3, seed=2024))
        fit = parafac_best_of(t, 3, restarts=3, max_iters=500, seed=0)
        self.assertLess(fit.nfe, 1e-6)

    def test_lake_spectrum_is_low_rank(self):
        mdp = build_gridworld(FROZEN_LAKE_4X4, discount=0.9)
        _, q = policy_iteration(mdp)

        # value iteration and a plain numpy SVD as the reference
        reference = np.zeros(64)
        for _ in range(2000):
            reference = mdp.reward + 0.9 * mdp.transition @ reference.reshape(16, 4).max(axis=1)
        np.testing.assert_allclose(q, reference, atol=1e-9)
        squared = np.linalg.svd(reference.reshape(16, 4), compute_uv=False) ** 2
        fractions = np.cumsum(squared) / np.sum(squared)
        expected = next(k + 1 for k, fraction in enumerate(fractions) if fraction >= 0.9)

        sigma = svd(q.reshape(16, 4)).singular_values
        self.assertEqual(effective_rank(sigma, 0.9), expected)
        frame = ValueAnalyzer().analyze_svd(q.reshape(16, 4))
        self.assertTrue(np.all(frame['effective_rank_90'] == expected))
        self.assertLessEqual(expected, 5)


class TestLearnerStructure(unittest.TestCase):

    def test_matrix_and_tensor_trajectories_agree(self):
        rng = np.random.default_rng(5)
        cfg = LearnerConfig(kind='mlr', discount=0.95, alpha=0.02, rank=2)
        matrix = MatrixFactors.random((10,), (5,), 2, seed=11, scale=0.3)
        tensor = TensorFactors.from_matrix(matrix)

        for _ in range(1000):
            s, a, s_next = (int(rng.integers(10)),), (int(rng.integers(5)),), (int(rng.integers(10)),)
            reward, terminal = float(rng.uniform(-1, 1)), bool(rng.random() < 0.05)
            mlr_update(matrix, s, a, reward, s_next, terminal, cfg)
            tlr_update(tensor, s, a, reward, s_next, terminal, cfg)
            self.assertLessEqual(np.max(np.abs(tensor.factors[0] - matrix.left)), 1e-12)
            self.assertLessEqual(np.max(np.abs(tensor.factors[1] - matrix.right.T)), 1e-12)

    def test_parameter_counts(self):
        self.assertAlmostEqual(parameter_ratio(4, 10, 1, 1), 0.2)
        cfg = ExperimentConfig.from_file(os.path.join(CONFIG_DIR, 'pendulum_mlr.json'))
        _, grid, _ = cfg.build()
        self.assertEqual(count_parameters('mlr', grid.state_buckets, grid.action_buckets, cfg.learner.rank), 840)
        cfg = ExperimentConfig.from_file(os.path.join(CONFIG_DIR, 'pendulum_tlr.json'))
        _, grid, partition = cfg.build()
        self.assertEqual(count_parameters('tlr', grid.state_buckets, grid.action_buckets, cfg.learner.rank,
                                          grouped_dims=partition.grouped_sizes), 120)


class TestPipelineDeterminism(unittest.TestCase):

    def setUp(self):
        self.work_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.work_dir, ignore_errors=True)

    def _write(self, name, cfg):
        manager = DataManager(os.path.join(self.work_dir, name))
        results = run_experiment(cfg)
        paths = [manager.save_csv(train_frame(results), 'train_returns.csv'),
                 manager.save_csv(eval_frame(results), 'eval_returns.csv'),
                 manager.save_csv(summary_frame(results), 'summary.csv'),
                 manager.save_csv(runs_frame(results), 'runs.csv')]
        contents = []
        for path in paths:
            with open(path, 'rb') as fh:
                contents.append(fh.read())
        return contents

    def test_lake_csvs_byte_identical(self):
        cfg = ExperimentConfig(environment='gridworld', environment_overrides={'layout': FROZEN_LAKE_4X4},
                               learner=LearnerConfig(kind='qtable', discount=0.9, alpha=0.5),
                               episodes=50, runs=3, eval_every=10, eval_episodes=2)
        self.assertEqual(self._write('a', cfg), self._write('b', cfg))


@unittest.skipUnless(Config.RUN_SLOW, "set LOWRANKQ_RUN_SLOW=1 for the pendulum comparison")
class TestPendulumComparison(unittest.TestCase):
    """Q-learning, MLR and TLR on the same 20x20x20 pendulum grid, 20 seeds each"""

    results = {}

    @classmethod
    def setUpClass(cls):
        for kind in ('qtable', 'mlr', 'tlr'):
            cfg = ExperimentConfig.from_file(os.path.join(CONFIG_DIR, f'pendulum_{kind}.json'))
            cls.results[kind] = run_experiment(cfg)
        cls.cfg = cfg
        cls.summaries = {kind: summary_frame(results) for kind, results in cls.results.items()}

    def _final(self, kind):
        return float(self.summaries[kind]['return_median'].iloc[-1])

    def test_low_rank_learners_match_table(self):
        baseline = self._final('qtable')
        self.assertTrue(at_least_fraction(self._final('tlr'), baseline, 0.9))
        self.assertTrue(at_least_fraction(self._final('mlr'), baseline, 0.9))

    def test_learners_beat_random_policy(self):
        env, grid, _ = self.cfg.build()
        random_returns = [evaluate_random(env, grid, 1, seed=Config.DEFAULT_SEED + i)[0] for i in range(20)]
        random_median = median(random_returns)
        self.assertGreater(self._final('tlr'), random_median)
        self.assertGreater(self._final('mlr'), random_median)

    def test_tensor_learner_converges_no_slower(self):
        def episodes(kind):
            summary = self.summaries[kind]
            return episodes_to_fraction(summary['episode'].tolist(), summary['return_median'].tolist(), 0.8)

        self.assertGreater(episodes('tlr'), 0)
        self.assertLessEqual(episodes('tlr'), episodes('qtable'))

    def test_learned_table_is_low_rank(self):
        model = self.results['qtable'][0].model
        sigma = svd(model.to_matrix()).singular_values
        self.assertEqual(model.to_matrix().shape, (400, 20))
        self.assertLessEqual(effective_rank(sigma, 0.9), 5)

    def test_truncated_svd_policy_keeps_return(self):
        model = self.results['qtable'][0].model
        env, grid, _ = self.cfg.build()
        rank = effective_rank(svd(model.to_matrix()).singular_values, 0.99)
        frame = ValueAnalyzer().tsvd_policy_test(model, env, grid, [rank], episodes=20, seed=Config.DEFAULT_SEED)
        self.assertEqual(frame['ncre_defined'].iloc[0], 1)
        self.assertLessEqual(frame['ncre'].iloc[0], 0.25)


if __name__ == '__main__':
    unittest.main()
