"""
Seeded multi-run training and greedy evaluation
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import json5
import numpy as np
import pandas as pd

from .metrics import MetricSeries, median
from ..envs.classic_control import ClassicControlEnv
from ..envs.discretization import DimensionPartition, DiscretizationGrid, PartitionSpec
from ..envs.registry import make_env
from ..learners.agent import Learner
from ..learners.config import LearnerConfig
from ..learners.models import ValueModel, best_action
from ..utils.config import Config
from ..utils.errors import ConfigError, DivergenceError

logger = logging.getLogger(__name__)

SEED_SPACE = 2 ** 32


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a set of training runs"""

    environment: str
    state_buckets: Tuple[int, ...] = ()
    action_buckets: Tuple[int, ...] = ()
    name: str = 'experiment'
    environment_overrides: Dict[str, Any] = field(default_factory=dict)
    partition: PartitionSpec = None
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    episodes: int = 100
    max_steps: Optional[int] = None
    runs: int = 1
    base_seed: int = Config.DEFAULT_SEED
    eval_every: int = Config.DEFAULT_EVAL_EVERY
    eval_episodes: int = Config.DEFAULT_EVAL_EPISODES
    workers: int = 1

    SECTIONS = {'name', 'environment', 'grid', 'partition', 'learner', 'episodes', 'max_steps',
                'runs', 'base_seed', 'evaluation', 'workers'}

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.episodes < 1:
            raise ConfigError("episodes must be at least 1")
        if self.eval_every < 1 or self.eval_episodes < 1:
            raise ConfigError("Evaluation cadence and episode count must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1")
        # resolve names and shapes eagerly so typos fail before any training
        self.build()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        unknown = set(data) - cls.SECTIONS
        if unknown:
            raise ConfigError(f"Unknown experiment keys: {sorted(unknown)}")

        environment = data.get('environment')
        if isinstance(environment, str):
            environment = {'name': environment}
        if not isinstance(environment, dict) or 'name' not in environment:
            raise ConfigError("environment must name an environment")
        unknown = set(environment) - {'name', 'overrides'}
        if unknown:
            raise ConfigError(f"Unknown environment keys: {sorted(unknown)}")

        grid = data.get('grid', {})
        unknown = set(grid) - {'state', 'action'}
        if unknown:
            raise ConfigError(f"Unknown grid keys: {sorted(unknown)}")

        evaluation = data.get('evaluation', {})
        unknown = set(evaluation) - {'every', 'episodes'}
        if unknown:
            raise ConfigError(f"Unknown evaluation keys: {sorted(unknown)}")

        partition = data.get('partition')
        if isinstance(partition, list):
            partition = tuple(tuple(g) for g in partition)

        return cls(
            name=data.get('name', 'experiment'),
            environment=environment['name'],
            environment_overrides=dict(environment.get('overrides', {})),
            state_buckets=tuple(grid.get('state', ())),
            action_buckets=tuple(grid.get('action', ())),
            partition=partition,
            learner=LearnerConfig.from_dict(data.get('learner', {})),
            episodes=data.get('episodes', 100),
            max_steps=data.get('max_steps'),
            runs=data.get('runs', 1),
            base_seed=data.get('base_seed', Config.DEFAULT_SEED),
            eval_every=evaluation.get('every', Config.DEFAULT_EVAL_EVERY),
            eval_episodes=evaluation.get('episodes', Config.DEFAULT_EVAL_EPISODES),
            workers=data.get('workers', 1),
        )

    @classmethod
    def from_file(cls, path: str) -> 'ExperimentConfig':
        with open(path) as fh:
            data = json5.load(fh)
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        partition = self.partition
        if partition is not None and not isinstance(partition, str):
            partition = [list(g) for g in partition]
        return {
            'name': self.name,
            'environment': {'name': self.environment, 'overrides': dict(self.environment_overrides)},
            'grid': {'state': list(self.state_buckets), 'action': list(self.action_buckets)},
            'partition': partition,
            'learner': self.learner.to_dict(),
            'episodes': self.episodes,
            'max_steps': self.max_steps,
            'runs': self.runs,
            'base_seed': self.base_seed,
            'evaluation': {'every': self.eval_every, 'episodes': self.eval_episodes},
            'workers': self.workers,
        }

    def replace(self, **changes) -> 'ExperimentConfig':
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return ExperimentConfig(**data)

    def make_env(self) -> ClassicControlEnv:
        overrides = dict(self.environment_overrides)
        if self.max_steps is not None:
            overrides['max_steps'] = self.max_steps
        return make_env(self.environment, overrides)

    def build(self) -> Tuple[ClassicControlEnv, DiscretizationGrid, DimensionPartition]:
        """Environment, grid and partition described by this config"""
        env = self.make_env()
        state_buckets, action_buckets = self.state_buckets, self.action_buckets
        if not state_buckets or not action_buckets:
            defaults = getattr(env, 'default_resolution', None)
            if defaults is None:
                raise ConfigError(f"{self.environment} needs explicit grid resolutions")
            state_buckets = state_buckets or tuple(defaults['state'])
            action_buckets = action_buckets or tuple(defaults['action'])
        grid = DiscretizationGrid.from_spec(env.spec, state_buckets, action_buckets)
        partition = DimensionPartition.from_spec(self.partition, grid.dims, len(grid.state_buckets))
        return env, grid, partition


@dataclass
class RunResult:
    run_index: int
    seed: int
    train_returns: List[float] = field(default_factory=list)
    train_steps: List[int] = field(default_factory=list)
    eval_episodes: List[int] = field(default_factory=list)
    eval_returns: List[float] = field(default_factory=list)
    eval_steps: List[float] = field(default_factory=list)
    model: Optional[ValueModel] = None
    num_parameters: int = 0
    diverged: bool = False
    divergence_message: str = ''
    wall_seconds: float = 0.0

    @property
    def final_greedy_return(self) -> float:
        return self.eval_returns[-1] if self.eval_returns else float('nan')


def _reset_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(SEED_SPACE))


def rollout(env: ClassicControlEnv, grid: DiscretizationGrid, policy, seed: int) -> Tuple[float, int]:
    """One episode; `policy` maps a state multi-index to an action multi-index"""
    state = env.reset(seed=seed)
    total, steps = 0.0, 0
    while True:
        action = policy(grid.discretize(state, 'state'))
        transition = env.step(state, grid.action_from_index(action))
        total += transition.reward
        steps += 1
        if transition.done:
            return total, steps
        state = transition.next_state


def evaluate_greedy(model: ValueModel, env: ClassicControlEnv, grid: DiscretizationGrid,
                    episodes: int, seed: int) -> Tuple[float, float]:
    """Median return and median length of epsilon = 0 rollouts"""
    if model.state_dims != grid.state_buckets or model.action_dims != grid.action_buckets:
        raise ConfigError(f"Model dims {model.state_dims}/{model.action_dims} do not match the grid")

    rng = np.random.default_rng(seed)
    returns, lengths = [], []
    for _ in range(episodes):
        total, steps = rollout(env, grid, lambda s: best_action(model, s)[0], _reset_seed(rng))
        returns.append(total)
        lengths.append(steps)
    return median(returns), median(lengths)


def evaluate_random(env: ClassicControlEnv, grid: DiscretizationGrid, episodes: int, seed: int) -> Tuple[float, float]:
    """Median return and length of a uniformly random policy over the action grid"""
    rng = np.random.default_rng(seed)
    returns, lengths = [], []
    for _ in range(episodes):
        reset_seed = _reset_seed(rng)
        total, steps = rollout(env, grid, lambda s: tuple(int(rng.integers(c)) for c in grid.action_buckets),
                               reset_seed)
        returns.append(total)
        lengths.append(steps)
    return median(returns), median(lengths)


def run_single(cfg: ExperimentConfig, run_index: int) -> RunResult:
    """One seeded training run interleaving epsilon-greedy and greedy episodes"""
    seed = cfg.base_seed + run_index
    env, grid, partition = cfg.build()
    eval_env = cfg.make_env()
    learner = Learner.create(cfg.learner, grid, partition, seed=seed)
    rng = np.random.default_rng(seed)
    result = RunResult(run_index=run_index, seed=seed, model=learner.model,
                       num_parameters=learner.num_parameters)

    started = time.perf_counter()
    try:
        for episode in range(cfg.episodes):
            epsilon = cfg.learner.exploration(episode)
            state = env.reset(seed=_reset_seed(rng))
            s = grid.discretize(state, 'state')
            total, steps = 0.0, 0
            while True:
                a = learner.act(s, epsilon, rng)
                transition = env.step(state, grid.action_from_index(a))
                s_next = grid.discretize(transition.next_state, 'state')
                learner.observe(s, a, transition.reward, s_next, transition.terminal)
                total += transition.reward
                steps += 1
                if transition.done:
                    break
                state, s = transition.next_state, s_next

            result.train_returns.append(total)
            result.train_steps.append(steps)

            if (episode + 1) % cfg.eval_every == 0 or episode + 1 == cfg.episodes:
                greedy_return, greedy_steps = evaluate_greedy(
                    learner.model, eval_env, grid, cfg.eval_episodes, seed=_reset_seed(rng))
                result.eval_episodes.append(episode + 1)
                result.eval_returns.append(greedy_return)
                result.eval_steps.append(greedy_steps)
    except DivergenceError as e:
        logger.error(f"Run {run_index} (seed {seed}) diverged: {e}")
        result.diverged = True
        result.divergence_message = str(e)

    result.wall_seconds = time.perf_counter() - started
    logger.info(f"Run {run_index} finished in {result.wall_seconds:.1f}s "
                f"(final greedy return {result.final_greedy_return:.3f})")
    return result


def _run_worker(args) -> RunResult:
    cfg, run_index = args
    return run_single(cfg, run_index)


def run_experiment(cfg: ExperimentConfig, progress=None) -> List[RunResult]:
    """All runs of an experiment, ordered by run index (seed_i = base_seed + i)"""
    jobs = [(cfg, i) for i in range(cfg.runs)]
    results: List[RunResult] = []

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for result in pool.map(_run_worker, jobs):
                results.append(result)
                if progress:
                    progress()
    else:
        for job in jobs:
            results.append(_run_worker(job))
            if progress:
                progress()

    results.sort(key=lambda r: r.run_index)
    diverged = sum(r.diverged for r in results)
    if diverged:
        logger.warning(f"{diverged} of {len(results)} runs diverged and are excluded from medians")
    return results


def train_frame(results: List[RunResult]) -> pd.DataFrame:
    rows = [
        {'run': r.run_index, 'seed': r.seed, 'episode': ep + 1, 'return': ret, 'steps': steps}
        for r in results
        for ep, (ret, steps) in enumerate(zip(r.train_returns, r.train_steps))
    ]
    return pd.DataFrame(rows, columns=['run', 'seed', 'episode', 'return', 'steps'])


def eval_frame(results: List[RunResult]) -> pd.DataFrame:
    rows = [
        {'run': r.run_index, 'episode': ep, 'greedy_return': ret, 'greedy_steps': steps, 'diverged': int(r.diverged)}
        for r in results
        for ep, ret, steps in zip(r.eval_episodes, r.eval_returns, r.eval_steps)
    ]
    return pd.DataFrame(rows, columns=['run', 'episode', 'greedy_return', 'greedy_steps', 'diverged'])


def summary_frame(results: List[RunResult]) -> pd.DataFrame:
    """Median and quartiles of greedy return and steps per evaluation point, diverged runs excluded"""
    frame = eval_frame([r for r in results if not r.diverged])
    returns = MetricSeries.from_frame(frame, 'greedy_return').to_frame('return')
    steps = MetricSeries.from_frame(frame, 'greedy_steps').to_frame('steps').drop(columns=['runs'])
    summary = returns.merge(steps, on='episode', how='left')
    summary['diverged'] = sum(r.diverged for r in results)
    return summary


def runs_frame(results: List[RunResult]) -> pd.DataFrame:
    return pd.DataFrame([
        {'run': r.run_index, 'seed': r.seed, 'parameters': r.num_parameters, 'diverged': int(r.diverged),
         'final_greedy_return': r.final_greedy_return}
        for r in results
    ], columns=['run', 'seed', 'parameters', 'diverged', 'final_greedy_return'])

