"""Clipped-surrogate, value and entropy losses with analytic gradients.

Conventions: the surrogate and entropy are objectives (maximised), the
value loss is minimised. `total_loss` combines them as
surrogate - c1 * value_loss + c2 * entropy, to be maximised. Updaters feed
Adam the negative gradient of whatever they maximise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import MLPSpec, backward, forward, log_softmax, softmax


@dataclass
class SurrogateStats:
    clip_fraction: float
    approx_kl: float
    ratio_mean: float


def _one_hot_minus_probs(probs: np.ndarray, actions: np.ndarray) -> np.ndarray:
    d = -probs.copy()
    d[np.arange(len(actions)), actions] += 1.0
    return d


def ppo_surrogate(
    spec: MLPSpec,
    params: np.ndarray,
    observations: np.ndarray,
    actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    clip_eps: float,
) -> tuple[float, np.ndarray, SurrogateStats]:
    """Mean clipped surrogate objective and its gradient wrt actor params."""
    actions = np.asarray(actions, dtype=int)
    logits, cache = forward(spec, params, observations)
    log_probs_all = log_softmax(logits)
    n = len(actions)
    log_probs = log_probs_all[np.arange(n), actions]
    with np.errstate(over="ignore"):
        ratio = np.exp(log_probs - old_log_probs)
    if not np.all(np.isfinite(ratio)):
        raise FloatingPointError("non-finite probability ratio in surrogate")
    clipped_ratio = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    unclipped = ratio * advantages
    clipped = clipped_ratio * advantages
    objective = float(np.mean(np.minimum(unclipped, clipped)))

    # Gradient flows only through samples where the unclipped branch is the
    # active minimum (ties included: inside the clip band both coincide).
    active = unclipped <= clipped
    coeff = np.where(active, ratio * advantages, 0.0) / n
    dlogits = coeff[:, None] * _one_hot_minus_probs(np.exp(log_probs_all), actions)
    grad = backward(params, cache, dlogits)

    stats = SurrogateStats(
        clip_fraction=float(np.mean(~active)),
        approx_kl=float(np.mean(old_log_probs - log_probs)),
        ratio_mean=float(np.mean(ratio)),
    )
    return objective, grad, stats


def entropy_bonus(
    spec: MLPSpec, params: np.ndarray, observations: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean policy entropy and its gradient wrt actor params."""
    logits, cache = forward(spec, params, observations)
    log_probs = log_softmax(logits)
    probs = np.exp(log_probs)
    per_sample = -np.sum(probs * log_probs, axis=-1)
    mean_entropy = float(np.mean(per_sample))
    n = logits.shape[0]
    dlogits = -probs * (log_probs + per_sample[:, None]) / n
    return mean_entropy, backward(params, cache, dlogits)


def value_loss(
    spec: MLPSpec, params: np.ndarray, states: np.ndarray, targets: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean squared error of the critic against value targets."""
    values, cache = forward(spec, params, states)
    values = values[:, 0]
    err = values - np.asarray(targets, dtype=float)
    loss = float(np.mean(err**2))
    dv = (2.0 * err / len(err))[:, None]
    return loss, backward(params, cache, dv)


def total_loss(
    actor_spec: MLPSpec,
    actor_params: np.ndarray,
    critic_spec: MLPSpec,
    critic_params: np.ndarray,
    observations: np.ndarray,
    actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    states: np.ndarray,
    targets: np.ndarray,
    clip_eps: float,
    c1: float,
    c2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Combined objective: surrogate - c1 * value_loss + c2 * entropy.

    Returns (objective, gradient wrt actor params, gradient wrt critic
    params); the objective is maximised.
    """
    surr, g_surr, _ = ppo_surrogate(
        actor_spec, actor_params, observations, actions, old_log_probs, advantages, clip_eps
    )
    ent, g_ent = entropy_bonus(actor_spec, actor_params, observations)
    vloss, g_v = value_loss(critic_spec, critic_params, states, targets)
    objective = surr - c1 * vloss + c2 * ent
    return objective, g_surr + c2 * g_ent, -c1 * g_v


def policy_log_probs(
    spec: MLPSpec, params: np.ndarray, observations: np.ndarray, actions: np.ndarray
) -> np.ndarray:
    logits, _ = forward(spec, params, observations)
    return log_softmax(logits)[np.arange(len(actions)), np.asarray(actions, dtype=int)]


def mean_kl(
    spec: MLPSpec,
    params_old: np.ndarray,
    params_new: np.ndarray,
    observations: np.ndarray,
) -> float:
    """Mean KL(pi_old || pi_new) over a batch of observations."""
    logits_old, _ = forward(spec, params_old, observations)
    logits_new, _ = forward(spec, params_new, observations)
    lp_old = log_softmax(logits_old)
    lp_new = log_softmax(logits_new)
    p_old = np.exp(lp_old)
    return float(np.mean(np.sum(p_old * (lp_old - lp_new), axis=-1)))
