"""Policy updaters: PPO, MAPPO, HAPPO and HATRPO over trajectory batches.

All four share the same plumbing: GAE advantages from the critic(s),
epoch/minibatch Adam regression of critics on value targets, and either
clipped-surrogate ascent (PPO family) or a KL-constrained natural-gradient
step (HATRPO). Sequential updaters visit agents in a seeded random
permutation and, with the compound-ratio flag on, scale later agents'
advantages by the probability ratios of the agents already updated on the
same samples.

Determinism contract: every random choice inside one update derives from
the `update_seed` argument via named streams, so updates are pure functions
of (policies, batch, config, update_seed). Minibatch shuffles use streams
that do not depend on the agent index, so agents with identical batches and
parameters receive identical updates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gae import compute_gae, normalize_advantages
from .losses import (
    _one_hot_minus_probs,
    entropy_bonus,
    mean_kl,
    policy_log_probs,
    ppo_surrogate,
    value_loss,
)
from .nn import adam_step, backward, forward, log_softmax
from .policies import NetDef, PolicySet
from .seeding import rng_for
from .trajectory import TrajectoryBatch
from .trust_region import conjugate_gradient, make_fvp_operator, natural_step_size


@dataclass(frozen=True)
class AlgoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    value_coeff: float = 0.5       # c1 in the combined objective
    entropy_coeff: float = 0.01    # c2
    learning_rate: float = 3e-4
    epochs: int = 10
    minibatches: int = 4
    normalize_advantage: bool = True
    trust_radius: float = 0.01     # delta: per-agent mean-KL bound
    cg_iterations: int = 10
    cg_damping: float = 0.1
    backtrack_coeff: float = 0.5
    backtrack_steps: int = 10
    compound_ratios: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.clip_eps <= 0 or self.trust_radius <= 0:
            raise ValueError("clip_eps and trust_radius must be positive")

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, data: dict) -> "AlgoConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown algo config keys: {sorted(unknown)}")
        return cls(**data)


# ---------------------------------------------------------------------------
# Shared building blocks
# ---------------------------------------------------------------------------


def _advantages_for(
    policies: PolicySet, batch: TrajectoryBatch, agent: int, cfg: AlgoConfig
) -> tuple[np.ndarray, np.ndarray]:
    """GAE advantages/targets for one agent's critic over the shared reward."""
    e, t = batch.rewards.shape
    flat_states = batch.flat_global_states()
    values = policies.values(agent, flat_states).reshape(e, t)
    bootstrap = policies.values(agent, batch.final_global_states)
    adv, targets = compute_gae(
        batch.rewards, values, bootstrap, batch.dones, cfg.gamma, cfg.gae_lambda
    )
    return adv, targets


def _minibatch_indices(n: int, minibatches: int, rng: np.random.Generator):
    return np.array_split(rng.permutation(n), minibatches)


def _critic_update(
    critic: NetDef, states: np.ndarray, targets: np.ndarray, cfg: AlgoConfig,
    rng: np.random.Generator,
) -> float:
    last_loss = float("nan")
    for _ in range(cfg.epochs):
        for idx in _minibatch_indices(len(targets), cfg.minibatches, rng):
            loss, grad = value_loss(critic.spec, critic.params, states[idx], targets[idx])
            critic.params = adam_step(critic.params, grad, critic.opt, cfg.learning_rate)
            last_loss = loss
    return last_loss


def _actor_clip_update(
    actor: NetDef,
    obs: np.ndarray,
    actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    cfg: AlgoConfig,
    rng: np.random.Generator,
) -> dict:
    stats = {"surrogate": 0.0, "entropy": 0.0, "clip_fraction": 0.0, "approx_kl": 0.0}
    count = 0
    for _ in range(cfg.epochs):
        for idx in _minibatch_indices(len(actions), cfg.minibatches, rng):
            surr, g_surr, s = ppo_surrogate(
                actor.spec, actor.params, obs[idx], actions[idx],
                old_log_probs[idx], advantages[idx], cfg.clip_eps,
            )
            ent, g_ent = entropy_bonus(actor.spec, actor.params, obs[idx])
            grad_ascent = g_surr + cfg.entropy_coeff * g_ent
            actor.params = adam_step(actor.params, -grad_ascent, actor.opt, cfg.learning_rate)
            stats["surrogate"] += surr
            stats["entropy"] += ent
            stats["clip_fraction"] += s.clip_fraction
            stats["approx_kl"] += s.approx_kl
            count += 1
    return {k: v / max(count, 1) for k, v in stats.items()}


# ---------------------------------------------------------------------------
# MAPPO (and single-agent PPO as its reduction)
# ---------------------------------------------------------------------------


def mappo_update(
    policies: PolicySet, batch: TrajectoryBatch, cfg: AlgoConfig, update_seed: int
) -> dict:
    """Shared centralized critic; each actor ascends the clipped objective on
    its own observations with the shared advantage."""
    if not policies.shared_critic:
        raise ValueError("mappo_update requires a shared critic")
    adv, targets = _advantages_for(policies, batch, 0, cfg)
    if cfg.normalize_advantage:
        adv = normalize_advantages(adv)
    flat_states = batch.flat_global_states()
    critic_loss = _critic_update(
        policies.critics[0], flat_states, targets.reshape(-1), cfg,
        rng_for(update_seed, "shuffle-critic"),
    )
    adv_flat = adv.reshape(-1)
    metrics = {"critic_loss": critic_loss, "agents": []}
    for i in range(policies.n_agents):
        stats = _actor_clip_update(
            policies.actors[i], batch.flat_obs(i), batch.flat_actions(i),
            batch.flat_log_probs(i), adv_flat, cfg,
            rng_for(update_seed, "shuffle-actor"),
        )
        metrics["agents"].append(stats)
    return metrics


def ppo_update(
    policies: PolicySet, batch: TrajectoryBatch, cfg: AlgoConfig, update_seed: int
) -> dict:
    """Single-agent PPO: exactly the MAPPO update with one agent."""
    if policies.n_agents != 1:
        raise ValueError("ppo_update is single-agent; use mappo_update")
    return mappo_update(policies, batch, cfg, update_seed)


# ---------------------------------------------------------------------------
# HAPPO: per-agent critics, sequential clipped updates
# ---------------------------------------------------------------------------


def happo_update(
    policies: PolicySet, batch: TrajectoryBatch, cfg: AlgoConfig, update_seed: int
) -> dict:
    if policies.shared_critic:
        raise ValueError("happo_update requires per-agent critics")
    n = policies.n_agents
    advantages, all_targets = [], []
    for i in range(n):
        adv, targets = _advantages_for(policies, batch, i, cfg)
        if cfg.normalize_advantage:
            adv = normalize_advantages(adv)
        advantages.append(adv.reshape(-1))
        all_targets.append(targets.reshape(-1))

    flat_states = batch.flat_global_states()
    critic_losses = []
    for i in range(n):
        critic_losses.append(
            _critic_update(policies.critics[i], flat_states, all_targets[i], cfg,
                           rng_for(update_seed, "shuffle-critic"))
        )

    order = rng_for(update_seed, "permutation").permutation(n)
    factor = np.ones(batch.n_samples)
    metrics = {"critic_loss": float(np.mean(critic_losses)), "order": order.tolist(),
               "agents": [None] * n}
    for i in order:
        effective_adv = advantages[i] * factor if cfg.compound_ratios else advantages[i]
        old_lp = batch.flat_log_probs(i)
        stats = _actor_clip_update(
            policies.actors[i], batch.flat_obs(i), batch.flat_actions(i),
            old_lp, effective_adv, cfg, rng_for(update_seed, "shuffle-actor"),
        )
        metrics["agents"][i] = stats
        if cfg.compound_ratios:
            new_lp = policy_log_probs(
                policies.actors[i].spec, policies.actors[i].params,
                batch.flat_obs(i), batch.flat_actions(i),
            )
            factor = factor * np.exp(new_lp - old_lp)
    return metrics


# ---------------------------------------------------------------------------
# HATRPO: per-agent trust-region natural-gradient steps
# ---------------------------------------------------------------------------


def _surrogate_and_gradient(
    actor: NetDef, obs, actions, old_log_probs, advantages
) -> tuple[float, np.ndarray]:
    """Importance-sampled surrogate mean(ratio * adv) and its gradient."""
    logits, cache = forward(actor.spec, actor.params, obs)
    log_probs_all = log_softmax(logits)
    n = len(actions)
    lp = log_probs_all[np.arange(n), actions]
    ratio = np.exp(lp - old_log_probs)
    surrogate = float(np.mean(ratio * advantages))
    coeff = (ratio * advantages) / n
    dlogits = coeff[:, None] * _one_hot_minus_probs(np.exp(log_probs_all), actions)
    return surrogate, backward(actor.params, cache, dlogits)


def _surrogate_value(actor: NetDef, obs, actions, old_log_probs, advantages) -> float:
    lp = policy_log_probs(actor.spec, actor.params, obs, actions)
    return float(np.mean(np.exp(lp - old_log_probs) * advantages))


def hatrpo_update(
    policies: PolicySet, batch: TrajectoryBatch, cfg: AlgoConfig, update_seed: int
) -> dict:
    """Per agent: natural-gradient direction by CG on Fisher-vector products,
    step scaled to the trust radius, then backtracking until the surrogate
    improves and the measured mean KL respects the radius."""
    if policies.shared_critic:
        raise ValueError("hatrpo_update requires per-agent critics")
    n = policies.n_agents
    advantages, all_targets = [], []
    for i in range(n):
        adv, targets = _advantages_for(policies, batch, i, cfg)
        if cfg.normalize_advantage:
            adv = normalize_advantages(adv)
        advantages.append(adv.reshape(-1))
        all_targets.append(targets.reshape(-1))

    flat_states = batch.flat_global_states()
    critic_losses = []
    for i in range(n):
        critic_losses.append(
            _critic_update(policies.critics[i], flat_states, all_targets[i], cfg,
                           rng_for(update_seed, "shuffle-critic"))
        )

    order = rng_for(update_seed, "permutation").permutation(n)
    factor = np.ones(batch.n_samples)
    metrics = {"critic_loss": float(np.mean(critic_losses)), "order": order.tolist(),
               "agents": [None] * n}
    for i in order:
        actor = policies.actors[i]
        obs = batch.flat_obs(i)
        actions = batch.flat_actions(i)
        old_lp = batch.flat_log_probs(i)
        effective_adv = advantages[i] * factor if cfg.compound_ratios else advantages[i]

        old_params = actor.params.copy()
        old_surrogate, grad = _surrogate_and_gradient(
            actor, obs, actions, old_lp, effective_adv
        )
        agent_stats = {"accepted": False, "kl": 0.0, "step_scale": 0.0,
                       "surrogate_improvement": 0.0, "cg_residual": float("nan"),
                       "backtracks": 0}
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < 1e-12:
            metrics["agents"][i] = agent_stats   # zero gradient: no step, KL 0
        else:
            fvp = make_fvp_operator(actor.spec, old_params, obs, cfg.cg_damping)
            cg = conjugate_gradient(fvp, grad, cfg.cg_iterations)
            direction = cg.solution
            agent_stats["cg_residual"] = cg.residual_norm
            g_dot_dir = float(grad @ direction)
            if g_dot_dir <= 1e-12:
                metrics["agents"][i] = agent_stats
            else:
                alpha = natural_step_size(cfg.trust_radius, g_dot_dir)
                scale = alpha
                for attempt in range(cfg.backtrack_steps):
                    candidate = old_params + scale * direction
                    actor.params = candidate
                    kl = mean_kl(actor.spec, old_params, candidate, obs)
                    new_surrogate = _surrogate_value(actor, obs, actions, old_lp, effective_adv)
                    if new_surrogate > old_surrogate and kl <= cfg.trust_radius:
                        agent_stats.update(
                            accepted=True, kl=kl, step_scale=scale,
                            surrogate_improvement=new_surrogate - old_surrogate,
                            backtracks=attempt,
                        )
                        break
                    scale *= cfg.backtrack_coeff
                else:
                    actor.params = old_params   # all backtracks failed
                    agent_stats["backtracks"] = cfg.backtrack_steps
                metrics["agents"][i] = agent_stats

        if cfg.compound_ratios:
            new_lp = policy_log_probs(actor.spec, actor.params, obs, actions)
            factor = factor * np.exp(new_lp - old_lp)
    return metrics


def trpo_update(
    policies: PolicySet, batch: TrajectoryBatch, cfg: AlgoConfig, update_seed: int
) -> dict:
    """Single-agent trust-region step: HATRPO's reduction with one agent."""
    if policies.n_agents != 1:
        raise ValueError("trpo_update is single-agent; use hatrpo_update")
    return hatrpo_update(policies, batch, cfg, update_seed)


UPDATERS = {
    "ppo": ppo_update,
    "mappo": mappo_update,
    "happo": happo_update,
    "hatrpo": hatrpo_update,
}


def updater_for(algo: str):
    if algo not in UPDATERS:
        raise ValueError(f"unknown algorithm {algo!r}; expected one of {sorted(UPDATERS)}")
    return UPDATERS[algo]


def uses_shared_critic(algo: str) -> bool:
    return algo in ("ppo", "mappo")
