"""Per-agent actors plus critics (one shared, or one per agent).

Actors act on local observations only; critics see the global training
state. Parameter initialisation is seeded per named stream so that layouts
and weights are reproducible and independent of how many agents exist.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .nn import AdamState, CategoricalDist, MLPSpec, forward, init_params
from .seeding import rng_for

DEFAULT_HIDDEN = (64, 64)
POLICY_HEAD_GAIN = 0.01


@dataclass
class NetDef:
    spec: MLPSpec
    params: np.ndarray
    opt: AdamState

    @classmethod
    def build(cls, spec: MLPSpec, rng: np.random.Generator, out_gain: float) -> "NetDef":
        return cls(spec=spec, params=init_params(spec, rng, out_gain),
                   opt=AdamState.zeros(spec.n_params))


class PolicySet:
    def __init__(self, actors: list[NetDef], critics: list[NetDef], shared_critic: bool):
        if not shared_critic and len(critics) != len(actors):
            raise ValueError("per-agent critics require one critic per actor")
        if shared_critic and len(critics) != 1:
            raise ValueError("shared critic mode requires exactly one critic")
        self.actors = actors
        self.critics = critics
        self.shared_critic = shared_critic

    @classmethod
    def build(
        cls,
        obs_dims: list[int],
        n_actions: int,
        global_state_dim: int,
        shared_critic: bool,
        seed: int,
        hidden: tuple[int, ...] = DEFAULT_HIDDEN,
    ) -> "PolicySet":
        actors = [
            NetDef.build(MLPSpec(obs_dims[i], hidden, n_actions),
                         rng_for(seed, "init-actor", i), POLICY_HEAD_GAIN)
            for i in range(len(obs_dims))
        ]
        n_critics = 1 if shared_critic else len(obs_dims)
        critics = [
            NetDef.build(MLPSpec(global_state_dim, hidden, 1),
                         rng_for(seed, "init-critic", i), 1.0)
            for i in range(n_critics)
        ]
        return cls(actors, critics, shared_critic)

    @property
    def n_agents(self) -> int:
        return len(self.actors)

    def critic_for(self, agent: int) -> NetDef:
        return self.critics[0] if self.shared_critic else self.critics[agent]

    def distribution(self, agent: int, obs: np.ndarray) -> CategoricalDist:
        logits, _ = forward(self.actors[agent].spec, self.actors[agent].params, obs)
        return CategoricalDist(logits)

    def act(
        self, observations: list[np.ndarray], rng: np.random.Generator, mode: str = "sample"
    ) -> tuple[list[int], list[float]]:
        """One action per agent from local observations; returns log-probs too."""
        actions, log_probs = [], []
        for i, obs in enumerate(observations):
            dist = self.distribution(i, obs)
            action = dist.sample(rng) if mode == "sample" else dist.argmax()
            actions.append(int(action))
            log_probs.append(float(dist.log_prob(action)))
        return actions, log_probs

    def values(self, agent: int, states: np.ndarray) -> np.ndarray:
        critic = self.critic_for(agent)
        out, _ = forward(critic.spec, critic.params, states)
        return out[..., 0]

    def clone(self) -> "PolicySet":
        return copy.deepcopy(self)
