"""Trajectory storage shared by the rollout collector and the updaters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TrajectoryBatch:
    """On-policy samples from synchronous multi-env collection.

    Per-agent arrays are lists indexed by agent; the reward stream is the
    shared global reward. Shapes: observations[i] (E, T, obs_dim_i);
    actions/log_probs[i] (E, T); rewards/dones (E, T); global_states
    (E, T, G); final_global_states (E, G) for bootstrap values.
    """

    observations: list[np.ndarray]
    actions: list[np.ndarray]
    log_probs: list[np.ndarray]
    rewards: np.ndarray
    dones: np.ndarray
    global_states: np.ndarray
    final_global_states: np.ndarray

    def __post_init__(self):
        e, t = self.rewards.shape
        for i in range(self.n_agents):
            if self.observations[i].shape[:2] != (e, t):
                raise ValueError(f"agent {i} observations misaligned with rewards")
            if self.actions[i].shape != (e, t) or self.log_probs[i].shape != (e, t):
                raise ValueError(f"agent {i} actions/log_probs misaligned")
            if not np.all(np.isfinite(self.log_probs[i])):
                raise ValueError(f"agent {i} has non-finite behaviour log-probs")
        if self.dones.shape != (e, t) or self.global_states.shape[:2] != (e, t):
            raise ValueError("dones/global_states misaligned with rewards")
        if self.final_global_states.shape != (e, self.global_states.shape[2]):
            raise ValueError("final_global_states misaligned")

    @property
    def n_agents(self) -> int:
        return len(self.observations)

    @property
    def n_samples(self) -> int:
        e, t = self.rewards.shape
        return e * t

    def flat_obs(self, agent: int) -> np.ndarray:
        e, t = self.rewards.shape
        return self.observations[agent].reshape(e * t, -1)

    def flat_actions(self, agent: int) -> np.ndarray:
        return self.actions[agent].reshape(-1)

    def flat_log_probs(self, agent: int) -> np.ndarray:
        return self.log_probs[agent].reshape(-1)

    def flat_global_states(self) -> np.ndarray:
        e, t = self.rewards.shape
        return self.global_states.reshape(e * t, -1)

    @property
    def joint_log_probs(self) -> np.ndarray:
        """Log-prob of the joint action: sum of per-agent log-probs."""
        total = np.zeros_like(self.rewards)
        for lp in self.log_probs:
            total = total + lp
        return total
