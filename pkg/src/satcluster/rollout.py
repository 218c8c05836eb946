"""Seeded trajectory collection, policy evaluation and episode records.

The collector steps a bank of independent environment instances in index
order with per-env action streams, so changing one env's stream never
perturbs another's trajectory and a fixed seed reproduces the batch
bit-for-bit. Completed-episode statistics are reported per collection
window; episodes running past the window are bootstrapped by the critic
during the update.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import ClusterLayout, cluster_preset
from .environment import ClusterEnv, EnvParams, RewardParams, recompose_reward
from .objective import ObjectiveBreakdown, evaluate_mission_objective
from .policies import PolicySet
from .scenario import ScenarioConfig
from .seeding import derived_seed, rng_for
from .trajectory import TrajectoryBatch
from .world import WorldData


@dataclass(frozen=True)
class RolloutConfig:
    num_envs: int = 20
    steps_per_env: int = 95
    eval_episodes: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.num_envs < 1 or self.steps_per_env < 1:
            raise ValueError("num_envs and steps_per_env must be >= 1")


@dataclass
class EpisodeStats:
    episode_return: float
    agent_returns: list[float]
    length: int
    unique_captures: int
    downlinked_gb: float
    failed: bool
    min_battery_frac: float


@dataclass
class MetricSample:
    global_step: int
    seed: int
    mean_return: float
    std_return: float
    agent_returns: list[float]
    unique_captures: float
    downlinked_gb: float
    failure_rate: float
    min_battery_frac: float
    wall_s: float
    episodes: int = 0

    @classmethod
    def from_episodes(
        cls, episodes: list[EpisodeStats], global_step: int, seed: int, wall_s: float,
        n_agents: int,
    ) -> "MetricSample":
        if not episodes:
            nan = float("nan")
            return cls(global_step, seed, nan, nan, [nan] * n_agents, nan, nan, nan, nan,
                       wall_s, 0)
        returns = np.array([e.episode_return for e in episodes])
        return cls(
            global_step=global_step,
            seed=seed,
            mean_return=float(returns.mean()),
            std_return=float(returns.std()),
            agent_returns=[
                float(np.mean([e.agent_returns[i] for e in episodes]))
                for i in range(n_agents)
            ],
            unique_captures=float(np.mean([e.unique_captures for e in episodes])),
            downlinked_gb=float(np.mean([e.downlinked_gb for e in episodes])),
            failure_rate=float(np.mean([e.failed for e in episodes])),
            min_battery_frac=float(np.mean([e.min_battery_frac for e in episodes])),
            wall_s=wall_s,
            episodes=len(episodes),
        )


class RolloutCollector:
    """Owns num_envs environment instances plus their seed bookkeeping."""

    def __init__(
        self,
        cluster: ClusterLayout,
        scenario: ScenarioConfig,
        config: RolloutConfig,
        world: WorldData | None = None,
        reward_params: RewardParams = RewardParams(),
        env_params: EnvParams = EnvParams(),
    ):
        self.cluster = cluster
        self.scenario = scenario
        self.config = config
        self.world = world if world is not None else WorldData.bundled()
        self.envs = [
            ClusterEnv(cluster, scenario, self.world, reward_params, env_params,
                       record_log=False)
            for _ in range(config.num_envs)
        ]
        self.n_agents = cluster.n_agents
        self._episode_counter = [0] * config.num_envs
        self._action_rngs = [
            rng_for(config.seed, "collect-act", e) for e in range(config.num_envs)
        ]
        self._partial = [self._fresh_partial() for _ in range(config.num_envs)]
        for e, env in enumerate(self.envs):
            env.reset(self._next_episode_seed(e))
        self.global_step = 0

    def _fresh_partial(self) -> dict:
        return {"return": 0.0, "agent_returns": [0.0] * self.n_agents, "length": 0}

    def _next_episode_seed(self, env_idx: int) -> int:
        seed = derived_seed(self.config.seed, "episode", env_idx,
                            self._episode_counter[env_idx])
        self._episode_counter[env_idx] += 1
        return seed

    def collect(self, policies: PolicySet) -> tuple[TrajectoryBatch, list[EpisodeStats]]:
        """Exactly num_envs x steps_per_env joint steps; returns the batch and
        stats for episodes that completed inside the window."""
        e_n, t_n = self.config.num_envs, self.config.steps_per_env
        obs_store = [
            np.zeros((e_n, t_n, self.envs[0].obs_dim)) for _ in range(self.n_agents)
        ]
        act_store = [np.zeros((e_n, t_n), dtype=int) for _ in range(self.n_agents)]
        logp_store = [np.zeros((e_n, t_n)) for _ in range(self.n_agents)]
        rewards = np.zeros((e_n, t_n))
        dones = np.zeros((e_n, t_n))
        gstates = np.zeros((e_n, t_n, self.envs[0].global_state_dim))
        finished: list[EpisodeStats] = []

        for t in range(t_n):
            for e, env in enumerate(self.envs):
                observations = env.observations
                gstates[e, t] = env.global_state()
                actions, log_probs = policies.act(observations, self._action_rngs[e])
                result = env.step(actions)
                for i in range(self.n_agents):
                    obs_store[i][e, t] = observations[i]
                    act_store[i][e, t] = actions[i]
                    logp_store[i][e, t] = log_probs[i]
                rewards[e, t] = result.reward
                dones[e, t] = float(result.done)
                part = self._partial[e]
                part["return"] += result.reward
                part["length"] += 1
                for i in range(self.n_agents):
                    part["agent_returns"][i] += result.components[i]["reward"]
                if result.done:
                    finished.append(
                        EpisodeStats(
                            episode_return=part["return"],
                            agent_returns=list(part["agent_returns"]),
                            length=part["length"],
                            unique_captures=result.info["unique_captures"],
                            downlinked_gb=result.info["downlinked_gb"],
                            failed=result.info["failures"] > 0,
                            min_battery_frac=result.info["min_battery_frac"],
                        )
                    )
                    self._partial[e] = self._fresh_partial()
                    env.reset(self._next_episode_seed(e))

        final_gstates = np.stack([env.global_state() for env in self.envs])
        batch = TrajectoryBatch(
            observations=obs_store,
            actions=act_store,
            log_probs=logp_store,
            rewards=rewards,
            dones=dones,
            global_states=gstates,
            final_global_states=final_gstates,
        )
        self.global_step += e_n * t_n
        return batch, finished

    # -- checkpoint support --------------------------------------------------

    def get_state(self) -> dict:
        return {
            "global_step": self.global_step,
            "episode_counter": list(self._episode_counter),
            "action_rng_states": [r.bit_generator.state for r in self._action_rngs],
            "partials": [dict(p, agent_returns=list(p["agent_returns"]))
                         for p in self._partial],
            "envs": [env.get_state() for env in self.envs],
        }

    def set_state(self, snapshot: dict) -> None:
        self.global_step = snapshot["global_step"]
        self._episode_counter = list(snapshot["episode_counter"])
        for rng, state in zip(self._action_rngs, snapshot["action_rng_states"]):
            rng.bit_generator.state = state
        self._partial = [dict(p, agent_returns=list(p["agent_returns"]))
                         for p in snapshot["partials"]]
        for env, env_state in zip(self.envs, snapshot["envs"]):
            env.set_state(env_state)


# ---------------------------------------------------------------------------
# Evaluation and episode records
# ---------------------------------------------------------------------------


def evaluate_policy(
    policies: PolicySet,
    cluster: ClusterLayout,
    scenario: ScenarioConfig,
    episodes: int,
    seed: int,
    mode: str = "argmax",
    world: WorldData | None = None,
    reward_params: RewardParams = RewardParams(),
    env_params: EnvParams = EnvParams(),
    record: bool = True,
) -> tuple[MetricSample, list[dict]]:
    """Run evaluation episodes without learning; optionally record them."""
    if mode not in ("sample", "argmax"):
        raise ValueError(f"mode must be 'sample' or 'argmax', got {mode!r}")
    world = world if world is not None else WorldData.bundled()
    env = ClusterEnv(cluster, scenario, world, reward_params, env_params,
                     record_log=record)
    stats: list[EpisodeStats] = []
    records: list[dict] = []
    start = time.perf_counter()
    for ep in range(episodes):
        rng = rng_for(seed, "eval-act", ep)
        env.reset(derived_seed(seed, "eval-episode", ep))
        done = False
        total = 0.0
        agent_totals = [0.0] * env.n_agents
        length = 0
        while not done:
            actions, _ = policies.act(env.observations, rng, mode=mode)
            result = env.step(actions)
            total += result.reward
            length += 1
            for i in range(env.n_agents):
                agent_totals[i] += result.components[i]["reward"]
            done = result.done
        stats.append(
            EpisodeStats(
                episode_return=total,
                agent_returns=agent_totals,
                length=length,
                unique_captures=result.info["unique_captures"],
                downlinked_gb=result.info["downlinked_gb"],
                failed=result.info["failures"] > 0,
                min_battery_frac=result.info["min_battery_frac"],
            )
        )
        if record:
            rec = env.episode_log()
            rec["meta"]["episode_return"] = total
            rec["meta"]["mode"] = mode
            records.append(rec)
    sample = MetricSample.from_episodes(
        stats, global_step=0, seed=seed, wall_s=time.perf_counter() - start,
        n_agents=env.n_agents,
    )
    return sample, records


class ReplayMismatchError(RuntimeError):
    """Replaying a record diverged from its logged trajectory."""


def save_episode_record(record: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(record))


def load_episode_record(path: str | Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ReplayMismatchError(
            f"{path}: record file is corrupt or truncated at offset {exc.pos}"
        ) from None


def replay_episode(
    record: dict,
    world: WorldData | None = None,
    reward_params: RewardParams | None = None,
    env_params: EnvParams = EnvParams(),
) -> ObjectiveBreakdown:
    """Re-step the environment from the record's seed and actions, verifying
    rewards and components bit-exactly, then return the objective breakdown."""
    meta = record.get("meta", {})
    for key in ("cluster", "scenario", "seed", "alpha", "beta"):
        if key not in meta:
            raise ReplayMismatchError(f"record meta missing {key!r}")
    if world is None:
        if meta.get("aoi_path", "bundled") == "bundled":
            world = WorldData.bundled()
        else:
            world = WorldData.from_files(meta["aoi_path"], meta["station_path"])
    if reward_params is None:
        reward_params = RewardParams(alpha=meta["alpha"], beta=meta["beta"])
    cluster = cluster_preset(meta["cluster"])
    scenario = ScenarioConfig.from_dict(meta["scenario"])
    env = ClusterEnv(cluster, scenario, world, reward_params, env_params, record_log=True)
    env.reset(meta["seed"])
    for step_num, step in enumerate(record["steps"]):
        result = env.step(step["actions"])
        if result.reward != step["reward"]:
            raise ReplayMismatchError(
                f"step {step_num}: replayed reward {result.reward!r} != "
                f"recorded {step['reward']!r}"
            )
        for i, agent_entry in enumerate(step["agents"]):
            comp = result.components[i]
            if comp["reward"] != agent_entry["reward"] or comp["branch"] != agent_entry["branch"]:
                raise ReplayMismatchError(
                    f"step {step_num} agent {i}: component mismatch"
                )
            if recompose_reward(comp) != comp["reward"]:
                raise ReplayMismatchError(
                    f"step {step_num} agent {i}: components do not recompose"
                )
    return evaluate_mission_objective(env.episode_log())
