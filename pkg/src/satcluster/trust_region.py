"""Matrix-free trust-region machinery: Fisher-vector products and CG.

The Fisher here is the Gauss-Newton curvature of the mean KL between the
frozen behaviour policy and the current policy, evaluated at the behaviour
parameters: (1/B) sum_b J_b^T (diag(p_b) - p_b p_b^T) J_b, where J is the
Jacobian of the logits wrt parameters. The product with a vector is
computed with one forward-mode and one reverse-mode pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .nn import MLPSpec, backward, forward_jvp, softmax


def fisher_vector_product(
    spec: MLPSpec,
    params: np.ndarray,
    observations: np.ndarray,
    vector: np.ndarray,
    damping: float,
) -> np.ndarray:
    """(H + damping * I) @ vector for the mean-KL Fisher at `params`."""
    if vector.shape != params.shape:
        raise ValueError("vector must match parameter count")
    logits, dlogits, cache = forward_jvp(spec, params, observations, vector)
    probs = softmax(logits)
    # (diag(p) - p p^T) @ u, row-wise.
    inner = np.sum(probs * dlogits, axis=-1, keepdims=True)
    w = probs * dlogits - probs * inner
    result = backward(params, cache, w / logits.shape[0]) + damping * vector
    if not np.all(np.isfinite(result)):
        raise FloatingPointError("non-finite Fisher-vector product")
    return result


def make_fvp_operator(
    spec: MLPSpec, params: np.ndarray, observations: np.ndarray, damping: float
) -> Callable[[np.ndarray], np.ndarray]:
    return lambda v: fisher_vector_product(spec, params, observations, v, damping)


@dataclass
class CGResult:
    solution: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    breakdown: bool = False


def conjugate_gradient(
    matvec: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    max_iterations: int = 10,
    tol: float = 1e-10,
) -> CGResult:
    """Solve H x = rhs for symmetric positive-definite H, matrix-free.

    Stops when the residual norm falls below tol * |rhs| or at the iteration
    cap. Near-zero curvature triggers a breakdown flag and returns the best
    iterate so far.
    """
    x = np.zeros_like(rhs)
    r = rhs.copy()
    p = r.copy()
    rs = float(r @ r)
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return CGResult(x, 0.0, 0, True)
    for i in range(max_iterations):
        hp = matvec(p)
        curvature = float(p @ hp)
        if curvature <= 1e-13 * float(p @ p):
            return CGResult(x, math_sqrt(rs), i, False, breakdown=True)
        alpha = rs / curvature
        x = x + alpha * p
        r = r - alpha * hp
        rs_new = float(r @ r)
        if math_sqrt(rs_new) <= tol * rhs_norm:
            return CGResult(x, math_sqrt(rs_new), i + 1, True)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return CGResult(x, math_sqrt(rs), max_iterations, False)


def math_sqrt(x: float) -> float:
    return float(np.sqrt(max(x, 0.0)))


def natural_step_size(trust_radius: float, g_dot_hinv_g: float) -> float:
    """Scale factor putting the natural-gradient step on the trust boundary:
    sqrt(2 * delta / g^T H^-1 g)."""
    if g_dot_hinv_g <= 0.0:
        raise ValueError("g^T H^-1 g must be positive")
    return math_sqrt(2.0 * trust_radius / g_dot_hinv_g)
