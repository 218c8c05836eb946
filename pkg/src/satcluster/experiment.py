"""Experiment orchestration: training runs, evaluation, sweeps, replay.

Every run directory carries a config.json (with the config hash embedded in
every artifact), one metrics.csv row per update, periodic checkpoints, and
a final-eval summary. Training is deterministic given the seed; resuming
from a checkpoint reproduces the uninterrupted run bit-for-bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointError, load_checkpoint, restore_policies, save_checkpoint
from .cluster import CLUSTER_NAMES, cluster_preset
from .environment import ClusterEnv, EnvParams, RewardParams
from .policies import PolicySet
from .rollout import (
    MetricSample,
    RolloutCollector,
    RolloutConfig,
    evaluate_policy,
    load_episode_record,
    replay_episode,
    save_episode_record,
)
from .scenario import SCENARIO_NAMES, ScenarioConfig, load_scenario, scenario_preset
from .seeding import derived_seed
from .updates import AlgoConfig, updater_for, uses_shared_critic
from .world import WorldData

ALGO_NAMES = ("ppo", "mappo", "happo", "hatrpo")


class ExperimentError(ValueError):
    """Invalid experiment configuration or mismatched artifacts."""


@dataclass(frozen=True)
class ExperimentConfig:
    algo: str = "ppo"
    cluster: str = "single"
    scenario: str = "easy"
    seeds: tuple[int, ...] = (0, 1, 2)
    total_steps: int = 100_000
    num_envs: int = 20
    steps_per_env: int = 95
    eval_episodes: int = 10
    checkpoint_every: int = 10
    hidden: tuple[int, ...] = (64, 64)
    algo_config: AlgoConfig = field(default_factory=AlgoConfig)
    reward: RewardParams = field(default_factory=RewardParams)
    scenario_file: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if isinstance(self.algo_config, dict):
            object.__setattr__(self, "algo_config", AlgoConfig.from_dict(self.algo_config))
        if isinstance(self.reward, dict):
            object.__setattr__(self, "reward", RewardParams(**self.reward))
        if self.algo not in ALGO_NAMES:
            raise ExperimentError(f"unknown algo {self.algo!r}; expected one of {ALGO_NAMES}")
        if self.cluster not in CLUSTER_NAMES:
            raise ExperimentError(
                f"unknown cluster {self.cluster!r}; expected one of {CLUSTER_NAMES}"
            )
        if self.scenario_file is None and self.scenario not in SCENARIO_NAMES:
            raise ExperimentError(
                f"unknown scenario {self.scenario!r}; expected one of {SCENARIO_NAMES}"
            )
        if (self.algo == "ppo") != (self.cluster == "single"):
            raise ExperimentError(
                "ppo is single-agent: use --cluster single with ppo and a "
                "multi-satellite cluster with mappo/happo/hatrpo"
            )
        if self.total_steps < self.num_envs * self.steps_per_env:
            raise ExperimentError("total_steps smaller than one collection window")

    def to_dict(self) -> dict:
        return {
            "algo": self.algo,
            "cluster": self.cluster,
            "scenario": self.scenario,
            "seeds": list(self.seeds),
            "total_steps": self.total_steps,
            "num_envs": self.num_envs,
            "steps_per_env": self.steps_per_env,
            "eval_episodes": self.eval_episodes,
            "checkpoint_every": self.checkpoint_every,
            "hidden": list(self.hidden),
            "algo_config": self.algo_config.to_dict(),
            "reward": {"alpha": self.reward.alpha, "beta": self.reward.beta},
            "scenario_file": self.scenario_file,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ExperimentError(f"unknown experiment config keys: {sorted(unknown)}")
        if "algo_config" in data and isinstance(data["algo_config"], dict):
            data["algo_config"] = AlgoConfig.from_dict(data["algo_config"])
        if "reward" in data and isinstance(data["reward"], dict):
            data["reward"] = RewardParams(**data["reward"])
        return cls(**data)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def resolve_scenario(self) -> ScenarioConfig:
        if self.scenario_file is not None:
            return load_scenario(self.scenario_file)
        return scenario_preset(self.scenario)


METRIC_COLUMNS_FIXED = ["step", "seed", "mean_return", "std_return"]
METRIC_COLUMNS_TAIL = ["unique_captures", "downlinked_gb", "failure_rate",
                       "min_battery_frac", "wall_s"]


def metric_columns(n_agents: int) -> list[str]:
    return (METRIC_COLUMNS_FIXED
            + [f"agent{i}_return" for i in range(n_agents)]
            + METRIC_COLUMNS_TAIL)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _metric_row(sample: MetricSample) -> list[str]:
    return [_fmt(v) for v in (
        sample.global_step, sample.seed, sample.mean_return, sample.std_return,
        *sample.agent_returns, sample.unique_captures, sample.downlinked_gb,
        sample.failure_rate, sample.min_battery_frac, sample.wall_s,
    )]


def _build_policies(config: ExperimentConfig, probe_env: ClusterEnv, seed: int) -> PolicySet:
    obs_dims = [probe_env.obs_dim] * probe_env.n_agents
    return PolicySet.build(
        obs_dims=obs_dims,
        n_actions=probe_env.n_actions,
        global_state_dim=probe_env.global_state_dim,
        shared_critic=uses_shared_critic(config.algo),
        seed=seed,
        hidden=config.hidden,
    )


def run_training(
    config: ExperimentConfig,
    seed: int,
    run_dir: str | Path,
    resume: bool = False,
    scenario_override: ScenarioConfig | None = None,
    quiet: bool = False,
) -> dict:
    """One training run for one seed. Returns the final evaluation summary."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    scenario = scenario_override or config.resolve_scenario()
    cluster = cluster_preset(config.cluster)
    world = WorldData.bundled()
    collector = RolloutCollector(
        cluster, scenario,
        RolloutConfig(config.num_envs, config.steps_per_env, config.eval_episodes, seed),
        world=world, reward_params=config.reward,
    )
    policies = _build_policies(config, collector.envs[0], seed)
    updater = updater_for(config.algo)
    n_updates = math.ceil(config.total_steps / (config.num_envs * config.steps_per_env))
    columns = metric_columns(cluster.n_agents)
    metrics_path = run_dir / "metrics.csv"
    ckpt_path = run_dir / "checkpoint.bin"
    (run_dir / "config.json").write_text(
        json.dumps({"config": config.to_dict(), "config_hash": config.config_hash,
                    "seed": seed}, indent=2)
    )

    start_update = 0
    if resume:
        ckpt = load_checkpoint(ckpt_path)
        if ckpt.config_hash != config.config_hash:
            raise ExperimentError(
                f"checkpoint config hash {ckpt.config_hash} does not match "
                f"current config {config.config_hash}"
            )
        restore_policies(ckpt, policies)
        collector.set_state(ckpt.collector_state)
        start_update = ckpt.update_idx
        _truncate_metrics(metrics_path, columns, start_update)
    else:
        with open(metrics_path, "w", newline="") as fh:
            csv.writer(fh).writerow(columns)

    for update in range(start_update, n_updates):
        t0 = time.perf_counter()
        batch, episodes = collector.collect(policies)
        update_seed = derived_seed(seed, "update", update)
        updater(policies, batch, config.algo_config, update_seed)
        sample = MetricSample.from_episodes(
            episodes, global_step=collector.global_step, seed=seed,
            wall_s=time.perf_counter() - t0, n_agents=cluster.n_agents,
        )
        with open(metrics_path, "a", newline="") as fh:
            csv.writer(fh).writerow(_metric_row(sample))
        if not quiet and (update % 10 == 0 or update == n_updates - 1):
            print(f"[seed {seed}] update {update + 1}/{n_updates} "
                  f"step {collector.global_step} mean_return {sample.mean_return:.2f}")
        if (update + 1) % config.checkpoint_every == 0 or update == n_updates - 1:
            save_checkpoint(
                ckpt_path, policies, config.config_hash,
                global_step=collector.global_step, update_idx=update + 1,
                collector_state=collector.get_state(),
                extra={"experiment_config": config.to_dict(), "run_seed": seed,
                       "scenario": scenario.to_dict()},
            )

    summary, _ = evaluate_policy(
        policies, cluster, scenario, episodes=config.eval_episodes,
        seed=derived_seed(seed, "final-eval"), mode="argmax", world=world,
        reward_params=config.reward, record=False,
    )
    result = _summary_dict(summary, config, seed, scenario)
    (run_dir / "eval_summary.json").write_text(json.dumps(result, indent=2))
    return result


def _truncate_metrics(path: Path, columns: list[str], keep_rows: int) -> None:
    if not path.exists():
        raise ExperimentError(f"cannot resume: {path} is missing")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows[1: 1 + keep_rows]:
            writer.writerow(row)


def _summary_dict(sample: MetricSample, config: ExperimentConfig, seed: int,
                  scenario: ScenarioConfig) -> dict:
    return {
        "algo": config.algo,
        "cluster": config.cluster,
        "scenario": scenario.name,
        "seed": seed,
        "mode": "argmax",
        "episodes": sample.episodes,
        "mean_return": sample.mean_return,
        "std_return": sample.std_return,
        "agent_returns": sample.agent_returns,
        "unique_captures": sample.unique_captures,
        "downlinked_gb": sample.downlinked_gb,
        "failure_rate": sample.failure_rate,
        "min_battery_frac": sample.min_battery_frac,
        "wall_s": sample.wall_s,
        "config_hash": config.config_hash,
    }


def run_experiment(config: ExperimentConfig, out_dir: str | Path,
                   resume: bool = False, quiet: bool = False) -> list[dict]:
    out_dir = Path(out_dir)
    summaries = []
    for seed in config.seeds:
        summaries.append(
            run_training(config, seed, out_dir / f"seed_{seed}", resume=resume, quiet=quiet)
        )
    (out_dir / "summaries.json").write_text(json.dumps(summaries, indent=2))
    return summaries


# ---------------------------------------------------------------------------
# Evaluation from a checkpoint
# ---------------------------------------------------------------------------


def run_eval(
    checkpoint_path: str | Path,
    scenario_name: str | None,
    episodes: int,
    seed: int,
    mode: str = "argmax",
    out_path: str | Path | None = None,
    traces_path: str | Path | None = None,
    records_dir: str | Path | None = None,
) -> dict:
    ckpt = load_checkpoint(checkpoint_path)
    extra = ckpt.manifest.get("extra", {})
    if "experiment_config" not in extra:
        raise CheckpointError("checkpoint carries no experiment config")
    config = ExperimentConfig.from_dict(extra["experiment_config"])
    if config.config_hash != ckpt.config_hash:
        raise ExperimentError("checkpoint config hash mismatch (corrupt artifact)")
    scenario = scenario_preset(scenario_name) if scenario_name else config.resolve_scenario()
    cluster = cluster_preset(config.cluster)
    world = WorldData.bundled()
    probe = ClusterEnv(cluster, scenario, world, config.reward, record_log=False)
    policies = _build_policies(config, probe, extra.get("run_seed", 0))
    restore_policies(ckpt, policies)
    sample, records = evaluate_policy(
        policies, cluster, scenario, episodes=episodes, seed=seed, mode=mode,
        world=world, reward_params=config.reward, record=True,
    )
    summary = _summary_dict(sample, config, seed, scenario)
    summary["mode"] = mode
    summary["checkpoint_step"] = ckpt.global_step
    for rec in records:
        rec["meta"]["config_hash"] = config.config_hash
    if records_dir is not None:
        records_dir = Path(records_dir)
        records_dir.mkdir(parents=True, exist_ok=True)
        for ep, rec in enumerate(records):
            save_episode_record(rec, records_dir / f"episode_{ep:03d}.json")
    if traces_path is not None:
        export_traces(records, traces_path)
    if out_path is not None:
        Path(out_path).write_text(json.dumps(summary, indent=2))
    return summary


def export_traces(records: list[dict], path: str | Path) -> None:
    """Per-step resource traces (battery/storage/wheels per agent)."""
    columns = ["episode", "step", "t", "agent", "action", "effective", "branch",
               "reward", "battery_frac", "storage_frac", "wheel0_rpm", "wheel1_rpm",
               "wheel2_rpm"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for ep, rec in enumerate(records):
            names = rec["meta"]["agent_names"]
            for step in rec["steps"]:
                for i, agent in enumerate(step["agents"]):
                    writer.writerow([
                        ep, step["step"], _fmt(step["t"]), names[i], agent["action"],
                        agent["effective"], agent["branch"], _fmt(agent["reward"]),
                        _fmt(agent["battery_frac"]), _fmt(agent["storage_frac"]),
                        _fmt(agent["wheels_rpm"][0]), _fmt(agent["wheels_rpm"][1]),
                        _fmt(agent["wheels_rpm"][2]),
                    ])


# ---------------------------------------------------------------------------
# Robustness sweeps over initial resource conditions
# ---------------------------------------------------------------------------

SWEEP_AXES = {
    "battery": ("initial_battery", (0.80, 0.90, 1.00)),
    "memory": ("initial_storage", (0.00, 0.80, 1.00)),
}


def run_sweep(config: ExperimentConfig, axis: str, out_dir: str | Path,
              quiet: bool = False) -> dict:
    if axis not in SWEEP_AXES:
        raise ExperimentError(f"unknown sweep axis {axis!r}; expected one of {sorted(SWEEP_AXES)}")
    field_name, values = SWEEP_AXES[axis]
    out_dir = Path(out_dir)
    base_scenario = config.resolve_scenario()
    results = {}
    for value in values:
        label = f"{axis}_{int(round(value * 100)):03d}"
        condition_dir = out_dir / label
        scenario = replace(base_scenario, **{field_name: value})
        summaries = []
        for seed in config.seeds:
            summaries.append(
                run_training(config, seed, condition_dir / f"seed_{seed}",
                             scenario_override=scenario, quiet=quiet)
            )
        results[label] = summaries
    _write_sweep_curves(out_dir, results.keys(), config.seeds)
    (out_dir / "sweep_summary.json").write_text(json.dumps(results, indent=2))
    return results


def _write_sweep_curves(out_dir: Path, labels, seeds) -> None:
    """Long-format learning curves: condition,seed,step,mean_return."""
    with open(out_dir / "curves.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "seed", "step", "mean_return"])
        for label in labels:
            for seed in seeds:
                metrics = out_dir / label / f"seed_{seed}" / "metrics.csv"
                with open(metrics, newline="") as mfh:
                    for row in csv.DictReader(mfh):
                        writer.writerow([label, seed, row["step"], row["mean_return"]])


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def run_replay(record_path: str | Path, print_timeline: bool = True) -> dict:
    record = load_episode_record(record_path)
    breakdown = replay_episode(record)
    out = breakdown.as_dict()
    out["replay_verified"] = True
    out["episode_return"] = record["meta"].get("episode_return")
    if print_timeline:
        print(f"replay of {record_path}: verified bit-exact over "
              f"{len(record['steps'])} steps")
        for key, value in out.items():
            print(f"  {key}: {value}")
        names = record["meta"]["agent_names"]
        print("  timeline (step: agent=action/branch):")
        for step in record["steps"]:
            acts = " ".join(
                f"{names[i]}={a['action']}/{a['branch']}"
                for i, a in enumerate(step["agents"])
            )
            print(f"    {step['step']:3d}: {acts}  r={step['reward']:+.3f}")
    return out
