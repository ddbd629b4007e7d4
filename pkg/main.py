#!/usr/bin/env python3
"""
LowRankQ - Low-rank value functions for reinforcement learning
Main application entry point
"""

import logging
import sys
from typing import List, Optional

import click
import numpy as np
import pandas as pd
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import Progress
from rich.table import Table

from src.analysis.value_analyzer import ValueAnalyzer
from src.data.data_manager import DataManager
from src.harness.experiment import (
    ExperimentConfig, eval_frame, evaluate_greedy, run_experiment, runs_frame, summary_frame, train_frame)
from src.mdp.builders import FROZEN_LAKE_4X4, build_gridworld, load_layout, parse_layout
from src.utils.config import Config

# Load environment variables
load_dotenv()

console = Console()
logger = logging.getLogger("lowrankq")


def _setup_logging():
    logging.basicConfig(
        level=Config.LOG_LEVEL.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
    )


def _fail(action: str, e: Exception):
    console.print(f"[red]Error {action}: {e}[/red]")
    sys.exit(1)


def _parse_ranks(text: str) -> List[int]:
    try:
        return [int(k) for k in text.split(',') if k.strip()]
    except ValueError:
        raise click.BadParameter(f"ranks must be comma-separated integers, got {text!r}")


def _gridworld(layout: Optional[str], slip: float, discount: float):
    grid_layout = load_layout(layout) if layout else parse_layout(FROZEN_LAKE_4X4)
    return build_gridworld(grid_layout, slip=slip, discount=discount)


def _model_context(model_path: str, config_path: Optional[str]):
    """Model plus the environment and grid it was trained on (or those of --config)"""
    model, _, metadata = DataManager.load_model(model_path)
    if config_path:
        cfg = ExperimentConfig.from_file(config_path)
    else:
        cfg = ExperimentConfig.from_dict(metadata['experiment'])
    env, grid, _ = cfg.build()
    return model, env, grid, cfg


def _print_frame(frame, title: str, limit: int = 20):
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column), style="cyan" if column == frame.columns[0] else None)
    for _, row in frame.head(limit).iterrows():
        table.add_row(*[f"{v:.6g}" if isinstance(v, float) else str(v) for v in row])
    console.print(table)


@click.group()
def cli():
    """LowRankQ - low-rank matrix and tensor Q-learning tools"""
    try:
        Config.validate_config()
    except ValueError as e:
        _fail("validating configuration", e)
    _setup_logging()


@cli.command()
@click.option('--config', 'config_path', required=True, type=click.Path(exists=True), help='Experiment config (JSON)')
@click.option('--out', 'out_dir', default=None, help='Output directory (default: data dir)')
@click.option('--seed', type=int, default=None, help='Override the base seed')
@click.option('--runs', type=int, default=None, help='Override the number of runs')
@click.option('--episodes', type=int, default=None, help='Override the training episode budget')
@click.option('--workers', type=int, default=None, help='Parallel worker processes')
def train(config_path, out_dir, seed, runs, episodes, workers):
    """Train seeded runs and write per-episode CSVs and models"""
    try:
        cfg = ExperimentConfig.from_file(config_path)
        overrides = {k: v for k, v in [('base_seed', seed), ('runs', runs), ('episodes', episodes),
                                       ('workers', workers)] if v is not None}
        if overrides:
            cfg = cfg.replace(**overrides)

        data_manager = DataManager(out_dir)
        console.print(f"[bold blue]Training {cfg.name}: {cfg.learner.kind} on {cfg.environment}, "
                      f"{cfg.runs} runs x {cfg.episodes} episodes[/bold blue]")

        with Progress(console=console) as progress:
            task = progress.add_task("Running...", total=cfg.runs)
            results = run_experiment(cfg, progress=lambda: progress.advance(task))

        experiment = cfg.to_dict()
        data_manager.save_json(experiment, 'experiment.json')
        data_manager.save_csv(train_frame(results), 'train_returns.csv')
        data_manager.save_csv(eval_frame(results), 'eval_returns.csv')
        data_manager.save_csv(summary_frame(results), 'summary.csv')
        data_manager.save_csv(runs_frame(results), 'runs.csv')

        for result in results:
            name = f"run_{result.run_index:03d}"
            metadata = {'experiment': experiment, 'run': result.run_index, 'seed': result.seed,
                        'diverged': result.diverged}
            data_manager.save_model(result.model, cfg.learner, name, metadata)
            data_manager.register_run(cfg.name, result.run_index, result.seed, result.diverged,
                                      result.wall_seconds, f"models/{name}{Config.MODEL_SUFFIX}", experiment)

        logger.info(f"Results written to {data_manager.out_dir}")
        diverged = sum(r.diverged for r in results)
        summary = summary_frame(results)
        final = summary['return_median'].iloc[-1] if len(summary) else float('nan')
        console.print(f"[green]Finished {len(results)} runs ({diverged} diverged); "
                      f"final median greedy return {final:.4f}[/green]")

    except Exception as e:
        _fail("training", e)


@cli.command()
@click.option('--model', 'model_path', required=True, type=click.Path(exists=True), help='Model file')
@click.option('--config', 'config_path', default=None, type=click.Path(exists=True),
              help='Evaluate on this experiment setup instead of the training one')
@click.option('--episodes', type=int, default=Config.DEFAULT_EVAL_EPISODES, help='Greedy episodes')
@click.option('--seed', type=int, default=Config.DEFAULT_SEED, help='Evaluation seed')
@click.option('--out', 'out_dir', default=None, help='Write evaluate.csv here')
def evaluate(model_path, config_path, episodes, seed, out_dir):
    """Greedy evaluation of a saved model"""
    try:
        model, env, grid, _ = _model_context(model_path, config_path)
        greedy_return, greedy_steps = evaluate_greedy(model, env, grid, episodes, seed)
        console.print(f"[green]Median greedy return {greedy_return:.4f} over {episodes} episodes "
                      f"(median length {greedy_steps:g})[/green]")
        if out_dir:
            frame = pd.DataFrame([{'episodes': episodes, 'seed': seed, 'median_return': greedy_return,
                                   'median_steps': greedy_steps}])
            DataManager(out_dir).save_csv(frame, 'evaluate.csv')
    except Exception as e:
        _fail("evaluating model", e)


@cli.command('analyze-svd')
@click.option('--model', 'model_path', default=None, type=click.Path(exists=True),
              help='Model file (default: exact Q* of a gridworld)')
@click.option('--layout', default=None, type=click.Path(exists=True), help='Gridworld layout file')
@click.option('--slip', default=0.0, type=float, help='Gridworld slip probability')
@click.option('--discount', default=0.9, type=float, help='Gridworld discount')
@click.option('--out', 'out_dir', default=None, help='Output directory')
def analyze_svd(model_path, layout, slip, discount, out_dir):
    """Singular values and effective ranks of a Q-matrix"""
    try:
        if model_path:
            model, _, _ = DataManager.load_model(model_path)
            q_matrix = model.to_matrix()
        else:
            mdp = _gridworld(layout, slip, discount)
            q_matrix = ValueAnalyzer.solve_mdp(mdp)['q'].drop(columns=['state']).to_numpy()

        frame = ValueAnalyzer().analyze_svd(q_matrix)
        DataManager(out_dir).save_csv(frame, 'svd.csv')
        _print_frame(frame, f"Singular values of the {q_matrix.shape[0]}x{q_matrix.shape[1]} Q-matrix")
    except Exception as e:
        _fail("analyzing spectrum", e)


@cli.command('parafac-sweep')
@click.option('--model', 'model_path', default=None, type=click.Path(exists=True),
              help='Model file (default: exact Q* of a gridworld)')
@click.option('--layout', default=None, type=click.Path(exists=True), help='Gridworld layout file')
@click.option('--ranks', default='1,2,3,4', help='Comma-separated ascending ranks')
@click.option('--restarts', default=Config.ALS_RESTARTS, type=int, help='ALS restarts per rank')
@click.option('--seed', type=int, default=Config.DEFAULT_SEED, help='ALS initialization seed')
@click.option('--out', 'out_dir', default=None, help='Output directory')
def parafac_sweep(model_path, layout, ranks, restarts, seed, out_dir):
    """PARAFAC fit error of a Q-tensor across ranks"""
    try:
        if model_path:
            model, _, _ = DataManager.load_model(model_path)
            tensor = model.to_matrix().reshape(model.state_dims + model.action_dims)
        else:
            grid_layout = load_layout(layout) if layout else parse_layout(FROZEN_LAKE_4X4)
            q_star = ValueAnalyzer.solve_mdp(build_gridworld(grid_layout))['q'].drop(columns=['state'])
            # rows x columns x moves
            tensor = q_star.to_numpy().reshape(grid_layout.shape + (q_star.shape[1],))

        frame = ValueAnalyzer().parafac_sweep(tensor, _parse_ranks(ranks), restarts=restarts, seed=seed)
        DataManager(out_dir).save_csv(frame, 'parafac_sweep.csv')
        _print_frame(frame, f"PARAFAC sweep of a {'x'.join(map(str, np.shape(tensor)))} tensor")
    except Exception as e:
        _fail("running PARAFAC sweep", e)


@cli.command('tsvd-policy-test')
@click.option('--model', 'model_path', required=True, type=click.Path(exists=True), help='Model file')
@click.option('--config', 'config_path', default=None, type=click.Path(exists=True),
              help='Evaluate on this experiment setup instead of the training one')
@click.option('--ranks', default=None, help='Comma-separated ranks (default: 1..min(C_S, C_A))')
@click.option('--episodes', type=int, default=Config.DEFAULT_EVAL_EPISODES, help='Greedy episodes per rank')
@click.option('--seed', type=int, default=Config.DEFAULT_SEED, help='Evaluation seed')
@click.option('--out', 'out_dir', default=None, help='Output directory')
def tsvd_policy_test(model_path, config_path, ranks, episodes, seed, out_dir):
    """Return of greedy policies read off truncated SVDs of a Q-matrix"""
    try:
        model, env, grid, _ = _model_context(model_path, config_path)
        rank_list = _parse_ranks(ranks) if ranks else list(range(1, min(model.num_states, model.num_actions) + 1))
        frame = ValueAnalyzer().tsvd_policy_test(model, env, grid, rank_list, episodes, seed)
        DataManager(out_dir).save_csv(frame, 'tsvd_policy.csv')
        _print_frame(frame, "Truncated-SVD policies")
    except Exception as e:
        _fail("testing truncated-SVD policies", e)


@cli.command('policy-iteration')
@click.option('--layout', default=None, type=click.Path(exists=True), help='Gridworld layout file (default: 4x4 lake)')
@click.option('--slip', default=0.0, type=float, help='Probability of each perpendicular move')
@click.option('--discount', default=0.9, type=float, help='Discount factor')
@click.option('--out', 'out_dir', default=None, help='Output directory')
def policy_iteration(layout, slip, discount, out_dir):
    """Exact optimal Q-function and policy of a gridworld"""
    try:
        mdp = _gridworld(layout, slip, discount)
        frames = ValueAnalyzer.solve_mdp(mdp)
        data_manager = DataManager(out_dir)
        data_manager.save_csv(frames['q'], 'q_star.csv')
        data_manager.save_csv(frames['policy'], 'policy.csv')
        _print_frame(frames['policy'], "Optimal policy (0=left 1=down 2=right 3=up)", limit=mdp.num_states)
    except Exception as e:
        _fail("running policy iteration", e)


@cli.command('emit-table')
@click.option('--results', 'result_dirs', multiple=True, required=True, type=click.Path(exists=True),
              help='Training output directory (repeatable)')
@click.option('--out', 'out_dir', default=None, help='Output directory')
def emit_table(result_dirs, out_dir):
    """Parameters vs. median return across training results"""
    try:
        frame = ValueAnalyzer().emit_table(result_dirs)
        DataManager(out_dir).save_csv(frame, 'table.csv')
        _print_frame(frame, "Parameters vs. median greedy return")
    except Exception as e:
        _fail("emitting table", e)


@cli.command()
@click.option('--out', 'out_dir', default=None, help='Output directory')
def status(out_dir):
    """Show registered runs"""
    try:
        runs = DataManager(out_dir).get_runs()
        table = Table(title="Run Registry")
        table.add_column("Experiment", style="cyan")
        table.add_column("Run", style="magenta")
        table.add_column("Seed")
        table.add_column("Diverged")
        table.add_column("Seconds", style="green")
        for run in runs:
            table.add_row(run['experiment'], str(run['run_index']), str(run['seed']),
                          "yes" if run['diverged'] else "no", f"{run['wall_seconds']:.1f}")
        console.print(table)
    except Exception as e:
        _fail("getting status", e)


if __name__ == '__main__':
    cli()
