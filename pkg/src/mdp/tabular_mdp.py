"""
Exact model-based machinery for finite MDPs

State-action pairs are flattened as s * C_A + a everywhere, so a value vector
q of length C_S * C_A reshapes to the C_S x C_A Q-matrix with q.reshape(C_S, C_A).
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg as la

from ..linalg.kernels import tsvd
from ..utils.config import Config
from ..utils.errors import (InvalidModelError, IterationCapError, NonConvergenceError,
                            RankError, SingularSystemError)

logger = logging.getLogger(__name__)

STOCHASTIC_TOLERANCE = 1e-12

# A ValueVector is a 1-D float array of length C_S * C_A
ValueVector = np.ndarray


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Transition matrix P ((C_S*C_A) x C_S), expected rewards r and discount"""

    num_states: int
    num_actions: int
    transition: np.ndarray
    reward: np.ndarray
    discount: float

    def __post_init__(self):
        n = self.num_states * self.num_actions
        if self.num_states < 1 or self.num_actions < 1:
            raise InvalidModelError("An MDP needs at least one state and one action")

        transition = np.array(self.transition, dtype=float)
        reward = np.array(self.reward, dtype=float).reshape(-1)
        if transition.shape != (n, self.num_states):
            raise InvalidModelError(f"Transition must be {(n, self.num_states)}, got {transition.shape}")
        if reward.shape != (n,):
            raise InvalidModelError(f"Reward must have length {n}, got {reward.shape}")
        if np.any(transition < 0) or np.any(np.abs(transition.sum(axis=1) - 1.0) > STOCHASTIC_TOLERANCE):
            raise InvalidModelError("Transition rows must be non-negative and sum to 1")
        if not np.all(np.isfinite(reward)):
            raise InvalidModelError("Rewards must be finite")
        if not 0.0 <= self.discount < 1.0:
            raise InvalidModelError(f"Discount must lie in [0, 1), got {self.discount}")

        transition.setflags(write=False)
        reward.setflags(write=False)
        object.__setattr__(self, 'transition', transition)
        object.__setattr__(self, 'reward', reward)

    def flat_index(self, state: int, action: int) -> int:
        return state * self.num_actions + action

    def unvec(self, q: ValueVector) -> np.ndarray:
        return np.asarray(q, dtype=float).reshape(self.num_states, self.num_actions)


@dataclass(frozen=True, eq=False)
class PolicyMatrix:
    """Per-state action distributions, shape (C_S, C_A)"""

    assignment: np.ndarray

    def __post_init__(self):
        assignment = np.array(self.assignment, dtype=float)
        if assignment.ndim != 2:
            raise InvalidModelError("Policy assignment must be a (C_S, C_A) matrix")
        if np.any(assignment < 0) or np.any(np.abs(assignment.sum(axis=1) - 1.0) > STOCHASTIC_TOLERANCE):
            raise InvalidModelError("Policy rows must be non-negative and sum to 1")
        assignment.setflags(write=False)
        object.__setattr__(self, 'assignment', assignment)

    @classmethod
    def deterministic(cls, actions, num_actions: int) -> 'PolicyMatrix':
        actions = np.asarray(actions, dtype=int)
        assignment = np.zeros((actions.size, num_actions))
        assignment[np.arange(actions.size), actions] = 1.0
        return cls(assignment)

    @classmethod
    def uniform(cls, num_states: int, num_actions: int) -> 'PolicyMatrix':
        return cls(np.full((num_states, num_actions), 1.0 / num_actions))

    @property
    def actions(self) -> np.ndarray:
        """Most likely action per state (the action itself for deterministic policies)"""
        return np.argmax(self.assignment, axis=1)

    def matrix(self) -> np.ndarray:
        """Pi of shape (C_S, C_S*C_A) with Pi[s, s*C_A + a] = pi(a|s)"""
        num_states, num_actions = self.assignment.shape
        pi = np.zeros((num_states, num_states * num_actions))
        for s in range(num_states):
            pi[s, s * num_actions:(s + 1) * num_actions] = self.assignment[s]
        return pi


def _check_policy(mdp: TabularMdp, policy: PolicyMatrix):
    if policy.assignment.shape != (mdp.num_states, mdp.num_actions):
        raise InvalidModelError(
            f"Policy shape {policy.assignment.shape} does not match MDP ({mdp.num_states}, {mdp.num_actions})")


def bellman_operator(mdp: TabularMdp, policy: PolicyMatrix, q: ValueVector) -> ValueVector:
    """r + gamma * P Pi q"""
    return mdp.reward + mdp.discount * (mdp.transition @ (policy.matrix() @ q))


def policy_evaluation_exact(mdp: TabularMdp, policy: PolicyMatrix) -> ValueVector:
    """Solve (I - gamma P Pi) q = r"""
    _check_policy(mdp, policy)
    n = mdp.num_states * mdp.num_actions
    system = np.eye(n) - mdp.discount * (mdp.transition @ policy.matrix())

    try:
        q = la.solve(system, mdp.reward)
    except (la.LinAlgError, ValueError) as e:
        raise SingularSystemError(f"Policy evaluation system is singular: {e}") from e

    if not np.all(np.isfinite(q)):
        raise SingularSystemError("Policy evaluation produced non-finite values")
    return q


def policy_evaluation_iterative(mdp: TabularMdp, policy: PolicyMatrix, tol: float = 1e-10,
                                max_iters: int = Config.EVALUATION_MAX_ITERS) -> ValueVector:
    """Fixed-point iteration q_{k+1} = r + gamma P Pi q_k from q_0 = 0"""
    if tol <= 0:
        raise ValueError("Tolerance must be positive")
    _check_policy(mdp, policy)

    p_pi = mdp.transition @ policy.matrix()
    q = np.zeros(mdp.num_states * mdp.num_actions)
    for k in range(1, max_iters + 1):
        q_next = mdp.reward + mdp.discount * (p_pi @ q)
        # with gamma = 0 the first sweep is already the fixed point r
        if mdp.discount == 0.0 or np.max(np.abs(q_next - q)) < tol:
            logger.debug(f"Iterative evaluation converged after {k} iterations")
            return q_next
        q = q_next

    raise NonConvergenceError(f"Iterative evaluation did not reach tol={tol} in {max_iters} iterations")


def policy_improvement(mdp: TabularMdp, q: ValueVector, tol: float = 0.0) -> PolicyMatrix:
    """Greedy deterministic policy; among actions within `tol` of the max the lowest index wins"""
    values = mdp.unvec(q)
    if not np.all(np.isfinite(values)):
        raise ValueError("Q values must be finite")

    best = values.max(axis=1, keepdims=True)
    actions = np.argmax(values >= best - tol, axis=1)
    return PolicyMatrix.deterministic(actions, mdp.num_actions)


def state_values(mdp: TabularMdp, policy: PolicyMatrix, q: Optional[ValueVector] = None) -> np.ndarray:
    """V^pi(s) = sum_a pi(a|s) Q^pi(s, a)"""
    if q is None:
        q = policy_evaluation_exact(mdp, policy)
    return np.sum(policy.assignment * mdp.unvec(q), axis=1)


def bellman_optimality_residual(mdp: TabularMdp, q: ValueVector) -> float:
    """max |q - (r + gamma P max_a' q)|"""
    target = mdp.reward + mdp.discount * (mdp.transition @ mdp.unvec(q).max(axis=1))
    return float(np.max(np.abs(q - target)))


def policy_iteration(mdp: TabularMdp, max_iters: int = Config.POLICY_ITERATION_CAP,
                     tie_tolerance: float = Config.TIE_TOLERANCE) -> Tuple[PolicyMatrix, ValueVector]:
    """Alternate exact evaluation and greedy improvement until the policy is stable"""
    policy = PolicyMatrix.deterministic(np.zeros(mdp.num_states, dtype=int), mdp.num_actions)

    for iteration in range(1, max_iters + 1):
        q = policy_evaluation_exact(mdp, policy)
        improved = policy_improvement(mdp, q, tol=tie_tolerance)
        if np.array_equal(improved.actions, policy.actions):
            residual = bellman_optimality_residual(mdp, q)
            logger.info(f"Policy iteration converged in {iteration} iterations (residual {residual:.2e})")
            return policy, q
        policy = improved

    raise IterationCapError(f"Policy iteration did not stabilise within {max_iters} iterations")


def tsvd_policy_evaluation(mdp: TabularMdp, policy: PolicyMatrix, rank: int, mode: str = 'one_shot',
                           tol: float = 1e-10, max_iters: int = Config.EVALUATION_MAX_ITERS) -> ValueVector:
    """Rank-constrained policy evaluation.

    one_shot: truncate the exact Q-matrix once.
    iterated: apply the Bellman operator and truncate at every step until the
    change between iterates falls below `tol`.
    """
    if not 1 <= rank <= min(mdp.num_states, mdp.num_actions):
        raise RankError(f"Rank {rank} outside [1, {min(mdp.num_states, mdp.num_actions)}]")

    if mode == 'one_shot':
        return tsvd(mdp.unvec(policy_evaluation_exact(mdp, policy)), rank).reshape(-1)

    if mode != 'iterated':
        raise ValueError(f"Unknown mode: {mode}")

    _check_policy(mdp, policy)
    p_pi = mdp.transition @ policy.matrix()
    q = np.zeros(mdp.num_states * mdp.num_actions)
    for k in range(1, max_iters + 1):
        q_next = tsvd(mdp.unvec(mdp.reward + mdp.discount * (p_pi @ q)), rank).reshape(-1)
        if np.max(np.abs(q_next - q)) < tol:
            logger.debug(f"Truncated-SVD evaluation converged after {k} iterations")
            return q_next
        q = q_next

    raise NonConvergenceError(f"Truncated-SVD evaluation did not reach tol={tol} in {max_iters} iterations")
