"""
Dense matrix and tensor kernels

Conventions used throughout the package:
    * matrices and tensors are numpy arrays in C order (last index fastest)
    * tensor modes are 0-based
    * the mode-d matricization of a tensor with dims (C_0, ..., C_{D-1}) has
      shape (prod_{i != d} C_i, C_d); its rows follow the C-order linearization
      of the remaining modes, so that for a PARAFAC model

          matricize(reconstruct(F), d) == khatri_rao_list(F without d) @ F[d].T
"""

import logging
from dataclasses import dataclass
from functools import reduce
from typing import List, Sequence

import numpy as np
from scipy import linalg as la

from ..utils.errors import RankError, ShapeError, SvdConvergenceError, ZeroNormError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD: m == left_vectors @ diag(singular_values) @ right_vectors.T"""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self, k: int = None) -> np.ndarray:
        """Sum of the leading k rank-one terms (all terms if k is None)"""
        k = len(self.singular_values) if k is None else k
        return (self.left_vectors[:, :k] * self.singular_values[:k]) @ self.right_vectors[:, :k].T


def _as_finite_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ShapeError(f"Expected a matrix, got array with {m.ndim} dimensions")
    if not np.all(np.isfinite(m)):
        raise ValueError("Matrix has non-finite entries")
    return m


def svd(m) -> SvdResult:
    """Thin SVD with non-increasing singular values.

    Uses LAPACK's divide-and-conquer driver and falls back to the QR-iteration
    driver when it does not converge. A second failure is raised.
    """
    m = _as_finite_matrix(m)

    try:
        u, s, vt = la.svd(m, full_matrices=False, lapack_driver='gesdd')
    except la.LinAlgError as e:
        logger.warning(f"gesdd did not converge ({e}), retrying with gesvd")
        try:
            u, s, vt = la.svd(m, full_matrices=False, lapack_driver='gesvd')
        except la.LinAlgError as e2:
            raise SvdConvergenceError(f"SVD failed to converge: {e2}") from e2

    return SvdResult(singular_values=s, left_vectors=u, right_vectors=vt.T)


def tsvd(m, k: int) -> np.ndarray:
    """Best rank-k Frobenius approximation (Eckart-Young)"""
    m = _as_finite_matrix(m)
    max_rank = min(m.shape)
    if not 1 <= k <= max_rank:
        raise RankError(f"Rank {k} outside [1, {max_rank}]")

    return svd(m).reconstruct(k)


def khatri_rao(a, b) -> np.ndarray:
    """Column-wise Kronecker product; column k is kron(a[:, k], b[:, k])"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeError(f"Khatri-Rao needs equal column counts, got {a.shape} and {b.shape}")
    return la.khatri_rao(a, b)


def khatri_rao_list(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Left-associative Khatri-Rao product X_0 ⊙ X_1 ⊙ ... in list order"""
    if not matrices:
        raise ShapeError("Khatri-Rao product of an empty list")
    return reduce(khatri_rao, matrices)


def _check_mode(ndim: int, mode: int):
    if not 0 <= mode < ndim:
        raise ShapeError(f"Mode {mode} out of range for a {ndim}-way tensor")


def matricize(t, mode: int) -> np.ndarray:
    """Mode-`mode` unfolding: columns index `mode`, rows the other modes in C order"""
    t = np.asarray(t, dtype=float)
    _check_mode(t.ndim, mode)
    return np.moveaxis(t, mode, -1).reshape(-1, t.shape[mode])


def unmatricize(m, dims: Sequence[int], mode: int) -> np.ndarray:
    """Exact inverse of `matricize`"""
    m = np.asarray(m, dtype=float)
    dims = tuple(int(c) for c in dims)
    _check_mode(len(dims), mode)

    rest = dims[:mode] + dims[mode + 1:]
    if m.shape != (int(np.prod(rest)), dims[mode]):
        raise ShapeError(f"Matrix of shape {m.shape} cannot be folded into dims {dims} along mode {mode}")

    return np.moveaxis(m.reshape(rest + (dims[mode],)), -1, mode)


def frobenius_norm(x) -> float:
    return float(np.linalg.norm(np.ravel(x)))


def nfe(x, x_hat) -> float:
    """Normalized Frobenius error ||x - x_hat||_F / ||x||_F"""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ShapeError(f"Shapes differ: {x.shape} vs {x_hat.shape}")

    ref = frobenius_norm(x)
    if ref == 0.0:
        raise ZeroNormError("Reference tensor has zero Frobenius norm")

    return frobenius_norm(x - x_hat) / ref


def cumulative_energy(singular_values: Sequence[float]) -> np.ndarray:
    """Fraction of squared Frobenius energy captured by the leading k values, k = 1..n"""
    sigma = np.asarray(singular_values, dtype=float)
    if sigma.size == 0:
        raise ValueError("Empty singular value list")

    energy = np.cumsum(sigma ** 2)
    if energy[-1] == 0.0:
        return np.ones_like(energy)
    return energy / energy[-1]


def effective_rank(singular_values: Sequence[float], energy: float) -> int:
    """Smallest k whose leading singular values hold `energy` of the squared norm"""
    if not 0.0 < energy <= 1.0:
        raise ValueError(f"Energy fraction must lie in (0, 1], got {energy}")

    sigma = np.sort(np.asarray(singular_values, dtype=float))[::-1]
    if sigma.size == 0:
        raise ValueError("Empty singular value list")

    cumulative = np.cumsum(sigma ** 2)
    if cumulative[-1] == 0.0:
        # 0 >= energy * 0 already holds at k = 1
        return 1

    return int(np.argmax(cumulative >= energy * cumulative[-1])) + 1


def tsvd_errors(m) -> List[float]:
    """Eckart-Young tail norms sqrt(sum_{i>k} sigma_i^2) for k = 1..min(m.shape)"""
    sigma = svd(m).singular_values
    tails = np.cumsum((sigma ** 2)[::-1])[::-1]
    return [float(np.sqrt(v)) for v in np.append(tails[1:], 0.0)]
