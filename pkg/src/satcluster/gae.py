"""Generalized advantage estimation over batched rollouts."""

from __future__ import annotations

import numpy as np


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    bootstrap_values: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and value targets for (n_envs, T) arrays.

    `values[e, t]` is V(s_t) under the collecting critic; `bootstrap_values[e]`
    is V of the state after the last step, used only when that step did not
    terminate. Accumulation resets across episode boundaries (dones).
    Returns (advantages, value_targets) with value_targets = adv + values.
    """
    rewards = np.atleast_2d(np.asarray(rewards, dtype=float))
    values = np.atleast_2d(np.asarray(values, dtype=float))
    dones = np.atleast_2d(np.asarray(dones, dtype=float))
    bootstrap_values = np.atleast_1d(np.asarray(bootstrap_values, dtype=float))
    if not (rewards.shape == values.shape == dones.shape):
        raise ValueError(
            f"shape mismatch: rewards {rewards.shape}, values {values.shape}, dones {dones.shape}"
        )
    if bootstrap_values.shape != (rewards.shape[0],):
        raise ValueError("bootstrap_values must have one entry per env row")

    n_envs, horizon = rewards.shape
    advantages = np.zeros_like(rewards)
    last = np.zeros(n_envs)
    for t in range(horizon - 1, -1, -1):
        nonterminal = 1.0 - dones[:, t]
        next_values = values[:, t + 1] if t + 1 < horizon else bootstrap_values
        delta = rewards[:, t] + gamma * next_values * nonterminal - values[:, t]
        last = delta + gamma * lam * nonterminal * last
        advantages[:, t] = last
    return advantages, advantages + values


def normalize_advantages(advantages: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Batch-normalise advantages to zero mean, unit variance."""
    flat = advantages.ravel()
    return (advantages - flat.mean()) / (flat.std() + eps)
