"""Command-line interface: train, eval, sweep, replay, defaults."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .environment import EnvParams, RewardParams
from .experiment import (
    ALGO_NAMES,
    ExperimentConfig,
    ExperimentError,
    run_eval,
    run_experiment,
    run_replay,
    run_sweep,
)
from .cluster import CLUSTER_NAMES
from .scenario import SCENARIO_NAMES
from .updates import AlgoConfig


def _out_root(out: str | None) -> Path:
    if out is not None:
        return Path(out)
    return Path(os.environ.get("SATCLUSTER_OUT", "runs"))


def _load_config(config_file: str | None, **overrides) -> ExperimentConfig:
    data = {}
    if config_file is not None:
        data = json.loads(Path(config_file).read_text())
        if not isinstance(data, dict):
            raise ExperimentError(f"{config_file}: expected a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


@click.group()
def main():
    """Satellite-cluster resource scheduling with multi-agent RL."""


def _common_train_options(fn):
    fn = click.option("--algo", type=click.Choice(ALGO_NAMES), default=None)(fn)
    fn = click.option("--cluster", type=click.Choice(CLUSTER_NAMES), default=None)(fn)
    fn = click.option("--scenario", type=click.Choice(SCENARIO_NAMES), default=None)(fn)
    fn = click.option("--scenario-file", type=click.Path(exists=True), default=None)(fn)
    fn = click.option("--seed", "seeds", type=int, multiple=True,
                      help="repeatable; defaults to 0 1 2")(fn)
    fn = click.option("--steps", "total_steps", type=int, default=None)(fn)
    fn = click.option("--num-envs", type=int, default=None)(fn)
    fn = click.option("--steps-per-env", type=int, default=None)(fn)
    fn = click.option("--eval-episodes", type=int, default=None)(fn)
    fn = click.option("--config", "config_file", type=click.Path(exists=True),
                      default=None, help="experiment config JSON")(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="output root (or set SATCLUSTER_OUT)")(fn)
    return fn


@main.command()
@_common_train_options
@click.option("--resume", is_flag=True, help="resume each seed from its checkpoint")
@click.option("--quiet", is_flag=True)
def train(algo, cluster, scenario, scenario_file, seeds, total_steps, num_envs,
          steps_per_env, eval_episodes, config_file, out, resume, quiet):
    """Train policies with the collect/update loop; writes metrics and checkpoints."""
    try:
        config = _load_config(
            config_file, algo=algo, cluster=cluster, scenario=scenario,
            scenario_file=scenario_file, seeds=list(seeds) or None,
            total_steps=total_steps, num_envs=num_envs, steps_per_env=steps_per_env,
            eval_episodes=eval_episodes,
        )
    except (ExperimentError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None
    out_dir = _out_root(out)
    summaries = run_experiment(config, out_dir, resume=resume, quiet=quiet)
    click.echo(json.dumps(summaries, indent=2))


@main.command("eval")
@click.argument("checkpoint", type=click.Path(exists=True))
@click.option("--scenario", type=click.Choice(SCENARIO_NAMES), default=None,
              help="defaults to the checkpoint's training scenario")
@click.option("--episodes", type=int, default=10)
@click.option("--seed", type=int, default=0)
@click.option("--mode", type=click.Choice(["argmax", "sample"]), default="argmax")
@click.option("--out", type=click.Path(), default=None, help="summary JSON path")
@click.option("--traces", type=click.Path(), default=None,
              help="write per-step resource traces CSV here")
@click.option("--records-dir", type=click.Path(), default=None,
              help="write replayable episode records here")
def eval_cmd(checkpoint, scenario, episodes, seed, mode, out, traces, records_dir):
    """Evaluate a checkpoint on a scenario; optionally export traces/records."""
    try:
        summary = run_eval(checkpoint, scenario, episodes, seed, mode=mode,
                           out_path=out, traces_path=traces, records_dir=records_dir)
    except Exception as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(json.dumps(summary, indent=2))


@main.command()
@_common_train_options
@click.option("--axis", type=click.Choice(["battery", "memory"]), required=True)
@click.option("--quiet", is_flag=True)
def sweep(algo, cluster, scenario, scenario_file, seeds, total_steps, num_envs,
          steps_per_env, eval_episodes, config_file, out, axis, quiet):
    """Train once per initial-condition level along the chosen axis."""
    try:
        config = _load_config(
            config_file, algo=algo, cluster=cluster, scenario=scenario,
            scenario_file=scenario_file, seeds=list(seeds) or None,
            total_steps=total_steps, num_envs=num_envs, steps_per_env=steps_per_env,
            eval_episodes=eval_episodes,
        )
        results = run_sweep(config, axis, _out_root(out), quiet=quiet)
    except (ExperimentError, ValueError) as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(json.dumps({k: [s["mean_return"] for s in v] for k, v in results.items()},
                          indent=2))


@main.command()
@click.argument("record", type=click.Path(exists=True))
def replay(record):
    """Replay an episode record, verify bit-fidelity, print the objective."""
    try:
        run_replay(record)
    except Exception as exc:
        raise click.ClickException(str(exc)) from None


@main.command()
def defaults():
    """Print all algorithm/environment/reward defaults as JSON."""
    click.echo(json.dumps({
        "algo_config": AlgoConfig().to_dict(),
        "reward": {"alpha": RewardParams().alpha, "beta": RewardParams().beta},
        "env_params": {
            "k_slots": EnvParams().k_slots,
            "min_imaging_elevation_deg": EnvParams().min_imaging_elevation_deg,
            "noncharge_sun_incidence": EnvParams().noncharge_sun_incidence,
            "slew_rpm_per_action": EnvParams().slew_rpm_per_action,
            "desat_rpm_per_action": EnvParams().desat_rpm_per_action,
            "terminate_on_failure": EnvParams().terminate_on_failure,
            "sun_direction": list(EnvParams().sun_direction),
        },
        "experiment": ExperimentConfig().to_dict(),
    }, indent=2))


if __name__ == "__main__":
    main()
