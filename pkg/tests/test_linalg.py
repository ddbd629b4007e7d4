"""
Tests for the dense kernels, PARAFAC fitting and factor text format
"""

import unittest
import os
import sys

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.linalg.kernels import (cumulative_energy, effective_rank, khatri_rao, khatri_rao_list, matricize,
                                nfe, svd, tsvd, tsvd_errors, unmatricize)
from src.linalg.parafac import FactorSet, parafac_als, parafac_best_of, reconstruct
from src.linalg import serialization
from src.utils.errors import RankError, ShapeError, ZeroNormError

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
small_matrices = st.tuples(st.integers(1, 8), st.integers(1, 8)).flatmap(
    lambda shape: arrays(np.float64, shape, elements=finite))


class TestSvd(unittest.TestCase):

    def test_identity(self):
        np.testing.assert_allclose(svd(np.eye(3)).singular_values, [1, 1, 1])

    def test_diagonal(self):
        np.testing.assert_allclose(svd(np.diag([3.0, 2.0, 1.0])).singular_values, [3, 2, 1])

    def test_random_reconstruction(self):
        m = np.random.default_rng(0).standard_normal((20, 30))
        result = svd(m)
        self.assertLess(np.linalg.norm(result.reconstruct() - m), 1e-8)

    @settings(max_examples=50, deadline=None)
    @given(small_matrices)
    def test_orthonormal_and_sorted(self, m):
        result = svd(m)
        k = len(result.singular_values)
        np.testing.assert_allclose(result.left_vectors.T @ result.left_vectors, np.eye(k), atol=1e-10)
        np.testing.assert_allclose(result.right_vectors.T @ result.right_vectors, np.eye(k), atol=1e-10)
        self.assertTrue(np.all(np.diff(result.singular_values) <= 1e-12))
        scale = max(1.0, np.abs(m).max())
        np.testing.assert_allclose(result.reconstruct(), m, atol=1e-8 * scale)

    def test_non_finite_rejected(self):
        with self.assertRaises(ValueError):
            svd(np.array([[1.0, np.nan]]))


class TestTsvd(unittest.TestCase):

    def test_rank_one_exact(self):
        m = np.outer([1.0, 2.0, 3.0], [4.0, 5.0])
        self.assertLess(np.linalg.norm(tsvd(m, 1) - m), 1e-10)

    def test_full_rank_identity(self):
        m = np.random.default_rng(1).standard_normal((5, 4))
        np.testing.assert_allclose(tsvd(m, 4), m, atol=1e-8)

    def test_discarded_singular_value(self):
        m = np.diag([3.0, 2.0, 1.0])
        self.assertAlmostEqual(np.linalg.norm(m - tsvd(m, 2)), 1.0, places=12)

    def test_eckart_young(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            m = rng.standard_normal((20, 30))
            for k, tail in enumerate(tsvd_errors(m), start=1):
                self.assertAlmostEqual(np.linalg.norm(m - tsvd(m, k)), tail, delta=1e-8)

    def test_rank_bounds(self):
        with self.assertRaises(RankError):
            tsvd(np.eye(3), 0)
        with self.assertRaises(RankError):
            tsvd(np.eye(3), 4)


class TestKhatriRao(unittest.TestCase):

    def test_identity_selector(self):
        result = khatri_rao(np.eye(2), np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]))
        np.testing.assert_array_equal(result[:, 0], [1, 3, 5, 0, 0, 0])
        np.testing.assert_array_equal(result[:, 1], [0, 0, 0, 2, 4, 6])

    def test_brute_force(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal((3, 2)), rng.standard_normal((4, 2))
        result = khatri_rao(a, b)
        self.assertEqual(result.shape, (12, 2))
        for k in range(2):
            np.testing.assert_allclose(result[:, k], np.kron(a[:, k], b[:, k]))

    def test_column_mismatch(self):
        with self.assertRaises(ShapeError):
            khatri_rao(np.ones((2, 2)), np.ones((2, 3)))


class TestMatricize(unittest.TestCase):

    def test_roundtrip_every_mode(self):
        t = np.random.default_rng(4).standard_normal((2, 3, 4))
        for d in range(3):
            np.testing.assert_array_equal(unmatricize(matricize(t, d), t.shape, d), t)

    def test_all_ones(self):
        t = reconstruct(FactorSet([np.ones((2, 1)), np.ones((3, 1)), np.ones((4, 1))]))
        for d in range(3):
            np.testing.assert_array_equal(matricize(t, d), np.ones((t.size // t.shape[d], t.shape[d])))

    def test_khatri_rao_identity(self):
        f = FactorSet.random((3, 4, 5), 2, seed=5)
        t = reconstruct(f)
        for d in range(3):
            others = [x for i, x in enumerate(f.factors) if i != d]
            np.testing.assert_allclose(matricize(t, d), khatri_rao_list(others) @ f.factors[d].T, atol=1e-12)

    def test_bad_mode(self):
        with self.assertRaises(ShapeError):
            matricize(np.ones((2, 2)), 2)


class TestReconstruct(unittest.TestCase):

    def test_outer_product(self):
        t = reconstruct(FactorSet([np.array([[1.0], [2.0]]), np.array([[3.0], [4.0]])]))
        np.testing.assert_array_equal(t, [[3, 4], [6, 8]])

    def test_brute_force_sum(self):
        f = FactorSet.random((3, 4, 2), 2, seed=6)
        t = reconstruct(f)
        a, b, c = f.factors
        for i in range(3):
            for j in range(4):
                for k in range(2):
                    expected = sum(a[i, z] * b[j, z] * c[k, z] for z in range(2))
                    self.assertAlmostEqual(t[i, j, k], expected, places=12)

    def test_random_init_positive(self):
        f = FactorSet.random((5, 5), 3, seed=7, scale=0.5)
        for factor in f.factors:
            self.assertTrue(np.all(factor > 0) and np.all(factor <= 0.5))

    def test_rank_zero_rejected(self):
        with self.assertRaises(RankError):
            FactorSet.random((2, 2), 0)


class TestParafac(unittest.TestCase):

    def test_recovers_rank_two(self):
        t = reconstruct(FactorSet.random((8, 8, 8), 2, seed=8))
        fit = parafac_best_of(t, 2, restarts=3, seed=0)
        self.assertLess(fit.nfe, 1e-6)

    def test_errors_non_increasing(self):
        t = np.random.default_rng(9).random((5, 6, 4))
        fit = parafac_als(t, 3, max_iters=100, seed=1)
        errors = np.asarray(fit.errors)
        self.assertTrue(np.all(errors[1:] <= errors[:-1] * (1 + 1e-9) + 1e-15))

    def test_all_ones_rank_one(self):
        fit = parafac_als(np.ones((3, 4, 5)), 1, seed=2)
        self.assertLess(fit.nfe, 1e-10)

    def test_higher_rank_fits_better(self):
        t = reconstruct(FactorSet.random((6, 6, 6), 3, seed=10))
        errors = [parafac_best_of(t, k, seed=0).nfe for k in (1, 2, 3)]
        self.assertGreater(errors[0], errors[1] - 1e-6)
        self.assertGreater(errors[1], errors[2] - 1e-6)


class TestNorms(unittest.TestCase):

    def test_nfe_values(self):
        x = np.array([3.0, 4.0])
        self.assertEqual(nfe(x, x), 0.0)
        self.assertEqual(nfe(x, np.zeros(2)), 1.0)
        self.assertAlmostEqual(nfe(x, np.array([0.0, 4.0])), 0.6)

    def test_nfe_zero_reference(self):
        with self.assertRaises(ZeroNormError):
            nfe(np.zeros(2), np.ones(2))

    def test_effective_rank(self):
        self.assertEqual(effective_rank([1, 0, 0], 0.99), 1)
        self.assertEqual(effective_rank([1, 1], 0.6), 2)
        self.assertEqual(effective_rank([3, 2, 1], 0.9), 2)
        self.assertEqual(effective_rank([0, 0], 0.9), 1)

    def test_effective_rank_of_zero_spectrum(self):
        for size in (1, 3, 20):
            for energy in (0.5, 0.9, 0.99, 1.0):
                self.assertEqual(effective_rank(np.zeros(size), energy), 1)

    def test_cumulative_energy(self):
        np.testing.assert_allclose(cumulative_energy([3, 2, 1]), [9 / 14, 13 / 14, 1.0])


class TestSerialization(unittest.TestCase):

    def test_factor_text_layout(self):
        f = FactorSet([np.array([[1.0], [2.0]]), np.array([[0.5]])])
        self.assertEqual(serialization.dumps_factors(f), "dims=2,1 rank=1\n1.0\n2.0\n\n0.5\n")

    def test_factors_roundtrip_exact(self):
        f = FactorSet.random((3, 4, 2), 2, seed=11)
        loaded = serialization.loads(serialization.dumps_factors(f))
        for a, b in zip(f.factors, loaded.factors):
            np.testing.assert_array_equal(a, b)

    def test_dense_roundtrip_exact(self):
        t = np.random.default_rng(12).standard_normal((2, 3, 4))
        np.testing.assert_array_equal(serialization.loads(serialization.dumps_tensor(t)), t)

    def test_block_size_mismatch(self):
        with self.assertRaises(ShapeError):
            serialization.loads("dims=2,2 rank=1\n1.0\n2.0\n\n3.0\n")


if __name__ == '__main__':
    unittest.main()
