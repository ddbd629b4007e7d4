"""
PARAFAC (CP) models: factor sets, reconstruction and alternating least squares
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg as la

from .kernels import khatri_rao_list, matricize, nfe
from ..utils.errors import RankError, ShapeError

logger = logging.getLogger(__name__)

# Normal equations with a condition number above this are solved by pseudo-inverse
ILL_CONDITIONED = 1e12


@dataclass
class FactorSet:
    """Rank-K PARAFAC model: factors[d] has shape (C_d, K)"""

    factors: List[np.ndarray]

    def __post_init__(self):
        if not self.factors:
            raise ShapeError("A factor set needs at least one factor")

        self.factors = [np.array(f, dtype=float) for f in self.factors]
        ranks = {f.shape[1] if f.ndim == 2 else -1 for f in self.factors}
        if len(ranks) != 1 or -1 in ranks:
            raise ShapeError(f"Factors must be matrices sharing a column count, got {[f.shape for f in self.factors]}")
        if self.rank < 1:
            raise RankError("PARAFAC rank must be at least 1")
        for d, f in enumerate(self.factors):
            if not np.all(np.isfinite(f)):
                raise ValueError(f"Factor {d} has non-finite entries")

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def dims(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def num_parameters(self) -> int:
        return sum(self.dims) * self.rank

    def copy(self) -> 'FactorSet':
        return FactorSet([f.copy() for f in self.factors])

    @classmethod
    def random(cls, dims: Sequence[int], rank: int, seed: int = 0, scale: float = 1.0) -> 'FactorSet':
        """Factors drawn uniform in (0, scale] from an explicit seed"""
        if rank < 1:
            raise RankError("PARAFAC rank must be at least 1")
        rng = np.random.default_rng(seed)
        # 1 - U[0, 1) lies in (0, 1]
        return cls([scale * (1.0 - rng.random((int(c), rank))) for c in dims])


def reconstruct(f: FactorSet) -> np.ndarray:
    """Dense tensor with entry sum_k prod_d F_d[i_d, k]"""
    letters = [chr(ord('a') + d) for d in range(len(f.factors))]
    operation = ','.join(f"{c}z" for c in letters) + '->' + ''.join(letters)
    return np.einsum(operation, *f.factors, optimize=True)


@dataclass
class ParafacFit:
    """Result of an ALS fit, with the per-iteration fit error history"""

    factors: FactorSet
    errors: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    rank_deficient: bool = False
    seed: Optional[int] = None

    @property
    def nfe(self) -> float:
        return self.errors[-1] if self.errors else float('nan')


def _solve_mode(gram: np.ndarray, rhs: np.ndarray):
    """Solve gram @ X = rhs; returns (X, used_pseudo_inverse)"""
    if np.linalg.cond(gram) < ILL_CONDITIONED:
        try:
            return la.solve(gram, rhs, assume_a='pos'), False
        except (la.LinAlgError, ValueError):
            pass
    return la.pinv(gram) @ rhs, True


def parafac_als(t, k: int, max_iters: int = 500, tol: float = 1e-12, seed: int = 0) -> ParafacFit:
    """Fit a rank-k PARAFAC model by alternating exact least-squares mode solves.

    Each mode solve minimises ||X_(d) - KR_d F_d^T||_F with the other factors
    fixed, so the fit error cannot increase between iterations. Iteration stops
    when the relative improvement drops below `tol` or after `max_iters`.
    """
    t = np.asarray(t, dtype=float)
    if k < 1:
        raise RankError("PARAFAC rank must be at least 1")
    if not np.all(np.isfinite(t)):
        raise ValueError("Tensor has non-finite entries")

    model = FactorSet.random(t.shape, k, seed=seed)
    unfoldings = [matricize(t, d) for d in range(t.ndim)]
    fit = ParafacFit(factors=model, seed=seed)

    previous = np.inf
    for iteration in range(1, max_iters + 1):
        for d in range(t.ndim):
            others = [f for i, f in enumerate(model.factors) if i != d]
            gram = np.ones((k, k))
            for f in others:
                gram *= f.T @ f
            rhs = khatri_rao_list(others).T @ unfoldings[d]
            solution, degenerate = _solve_mode(gram, rhs)
            model.factors[d] = solution.T
            fit.rank_deficient |= degenerate

        error = nfe(t, reconstruct(model))
        if error > previous * (1 + 1e-9) + 1e-15:
            logger.warning(f"ALS fit error rose from {previous:.3e} to {error:.3e} at iteration {iteration}")
        fit.errors.append(error)
        fit.iterations = iteration

        if error == 0.0 or (np.isfinite(previous) and previous - error < tol * max(previous, 1e-300)):
            fit.converged = True
            break
        previous = error

    if fit.rank_deficient:
        logger.warning(f"Rank-{k} ALS fit used pseudo-inverse solves")
    logger.debug(f"Rank-{k} ALS fit: NFE {fit.nfe:.3e} after {fit.iterations} iterations")
    return fit


def parafac_best_of(t, k: int, restarts: int = 3, max_iters: int = 500,
                    tol: float = 1e-12, seed: int = 0) -> ParafacFit:
    """Best (lowest NFE) of `restarts` ALS fits seeded seed, seed + 1, ..."""
    fits = [parafac_als(t, k, max_iters=max_iters, tol=tol, seed=seed + i) for i in range(restarts)]
    return min(fits, key=lambda fit: fit.nfe)
