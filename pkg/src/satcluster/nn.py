"""Minimal dense networks with exact reverse-mode gradients.

Parameters live in one flat float64 vector per network; weights are views
into it. Forward passes cache activations for the backward pass, and a
forward-mode variant propagates a parameter-space tangent (used for
Fisher-vector products). Everything is float64 and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MLPSpec:
    """Tanh MLP: in_dim -> hidden... -> out_dim (linear output head)."""

    in_dim: int
    hidden: tuple[int, ...]
    out_dim: int

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if len(self.hidden) < 1:
            raise ValueError("need at least one hidden layer")
        if self.in_dim <= 0 or self.out_dim <= 0 or any(h <= 0 for h in self.hidden):
            raise ValueError("all layer widths must be positive")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.in_dim, *self.hidden, self.out_dim)

    @property
    def n_layers(self) -> int:
        return len(self.dims) - 1

    @property
    def n_params(self) -> int:
        dims = self.dims
        return sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(self.n_layers))


def param_views(spec: MLPSpec, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """(W, b) views into the flat parameter vector, layer by layer."""
    if params.shape != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} params, got shape {params.shape}")
    views = []
    dims = spec.dims
    offset = 0
    for i in range(spec.n_layers):
        n_in, n_out = dims[i], dims[i + 1]
        w = params[offset:offset + n_in * n_out].reshape(n_in, n_out)
        offset += n_in * n_out
        b = params[offset:offset + n_out]
        offset += n_out
        views.append((w, b))
    return views


def _orthogonal(n_in: int, n_out: int, rng: np.random.Generator, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))          # fix QR sign ambiguity
    if n_in < n_out:
        q = q.T
    return gain * q[:n_in, :n_out]


def init_params(spec: MLPSpec, rng: np.random.Generator, out_gain: float = 1.0) -> np.ndarray:
    """Orthogonal weights (gain 1 hidden, out_gain output head), zero biases."""
    params = np.zeros(spec.n_params)
    for i, (w, b) in enumerate(param_views(spec, params)):
        gain = out_gain if i == spec.n_layers - 1 else 1.0
        w[:] = _orthogonal(w.shape[0], w.shape[1], rng, gain)
    return params


@dataclass
class ForwardCache:
    spec: MLPSpec
    activations: list[np.ndarray]   # [x, tanh outputs of each hidden layer]
    single: bool


def _as_batch(spec: MLPSpec, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != spec.in_dim:
        raise ValueError(f"input dim {x.shape[1]} != spec in_dim {spec.in_dim}")
    return x, single


def forward(spec: MLPSpec, params: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Evaluate the network; returns (output, cache for backward)."""
    a, single = _as_batch(spec, x)
    views = param_views(spec, params)
    activations = [a]
    for w, b in views[:-1]:
        a = np.tanh(a @ w + b)
        activations.append(a)
    w, b = views[-1]
    y = a @ w + b
    cache = ForwardCache(spec, activations, single)
    return (y[0] if single else y), cache


def backward(params: np.ndarray, cache: ForwardCache, dy: np.ndarray) -> np.ndarray:
    """Exact gradient of a scalar loss wrt params, given dL/doutput.

    dy must match the forward output's shape; gradients are summed over the
    batch (fold any 1/B into dy).
    """
    spec = cache.spec
    views = param_views(spec, params)
    d = np.asarray(dy, dtype=float)
    if cache.single:
        d = d[None, :]
    if d.shape != (cache.activations[0].shape[0], spec.out_dim):
        raise ValueError("output gradient shape mismatch with cached forward")
    grad = np.zeros_like(params)
    gviews = param_views(spec, grad)
    for layer in range(spec.n_layers - 1, -1, -1):
        a_in = cache.activations[layer]
        gw, gb = gviews[layer]
        gw += a_in.T @ d
        gb += d.sum(axis=0)
        if layer > 0:
            d = (d @ views[layer][0].T) * (1.0 - a_in**2)
    return grad


def forward_jvp(
    spec: MLPSpec, params: np.ndarray, x: np.ndarray, tangent: np.ndarray
) -> tuple[np.ndarray, np.ndarray, ForwardCache]:
    """Forward pass plus directional derivative of the output along a
    parameter-space tangent: returns (y, J_params @ tangent, cache)."""
    if tangent.shape != params.shape:
        raise ValueError("tangent must match parameter vector shape")
    a, single = _as_batch(spec, x)
    views = param_views(spec, params)
    tviews = param_views(spec, np.asarray(tangent, dtype=float))
    activations = [a]
    da = np.zeros_like(a)
    for (w, b), (dw, db) in zip(views[:-1], tviews[:-1]):
        z_dot = a @ dw + da @ w + db
        a = np.tanh(a @ w + b)
        da = (1.0 - a**2) * z_dot
        activations.append(a)
    (w, b), (dw, db) = views[-1], tviews[-1]
    y = a @ w + b
    dy = a @ dw + da @ w + db
    cache = ForwardCache(spec, activations, single)
    if single:
        return y[0], dy[0], cache
    return y, dy, cache


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n_params: int) -> "AdamState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params), t=0)


def adam_step(
    params: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> np.ndarray:
    """Bias-corrected Adam; mutates `state`, returns the updated params."""
    if grad.shape != params.shape:
        raise ValueError("gradient/parameter shape mismatch")
    if not np.all(np.isfinite(grad)):
        bad = int(np.argmax(~np.isfinite(grad)))
        raise ValueError(f"non-finite gradient (first bad entry at index {bad})")
    state.t += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * grad**2
    m_hat = state.m / (1.0 - beta1**state.t)
    v_hat = state.v / (1.0 - beta2**state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# Categorical distributions over logits
# ---------------------------------------------------------------------------


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


class CategoricalDist:
    """Discrete distribution parameterised by (possibly batched) logits."""

    def __init__(self, logits: np.ndarray):
        self.logits = np.asarray(logits, dtype=float)
        self.log_probs = log_softmax(self.logits)
        self.probs = np.exp(self.log_probs)

    def log_prob(self, action) -> np.ndarray | float:
        if self.logits.ndim == 1:
            return float(self.log_probs[int(action)])
        idx = np.asarray(action, dtype=int)
        return self.log_probs[np.arange(len(idx)), idx]

    def entropy(self) -> np.ndarray | float:
        h = -np.sum(self.probs * self.log_probs, axis=-1)
        return float(h) if self.logits.ndim == 1 else h

    def kl(self, other: "CategoricalDist") -> np.ndarray | float:
        kl = np.sum(self.probs * (self.log_probs - other.log_probs), axis=-1)
        return float(kl) if self.logits.ndim == 1 else kl

    def sample(self, rng: np.random.Generator):
        if self.logits.ndim == 1:
            u = rng.random()
            return int(np.searchsorted(np.cumsum(self.probs), u))
        u = rng.random(self.logits.shape[0])
        cdf = np.cumsum(self.probs, axis=-1)
        return np.array([int(np.searchsorted(cdf[i], u[i])) for i in range(len(u))])

    def argmax(self):
        a = np.argmax(self.logits, axis=-1)
        return int(a) if self.logits.ndim == 1 else a
