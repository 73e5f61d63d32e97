import numpy as np
from scipy.special import expit

from core.errors import DomainError
from core.types import ComplexMatrix, FloatArray


def _check(tau_sq: float, activity_prob: float) -> None:
    if tau_sq <= 0:
        raise DomainError(f"tau_sq must be positive, got {tau_sq}")
    if not 0 < activity_prob < 1:
        raise DomainError(f"activity probability must lie in (0, 1), got {activity_prob}")


def _posterior_terms(rows: ComplexMatrix, gains: FloatArray, tau_sq: float, activity_prob: float):
    """Shrinkage θ/(1+θ), posterior activity probability and Δ per row."""
    g_sq = np.asarray(gains, dtype=float) ** 2
    theta = g_sq / tau_sq
    delta = 1 / tau_sq - 1 / (g_sq + tau_sq)
    m = rows.shape[-1]
    norm_sq = np.sum(np.abs(rows) ** 2, axis=-1)
    llr = delta * norm_sq - m * np.log1p(theta)
    active = expit(llr + np.log(activity_prob) - np.log1p(-activity_prob))
    return theta / (1 + theta), active, delta


def denoise(rows: ComplexMatrix, gains: FloatArray | float, tau_sq: float, activity_prob: float) -> ComplexMatrix:
    """Posterior mean of Bernoulli-Gaussian rows observed in CN(0, τ²I) noise.

    Works on one row (M,) or a stack (K, M) with one gain per row. Evaluated
    through the log-likelihood ratio so that (1+θ)^M never overflows.
    """
    _check(tau_sq, activity_prob)
    rows = np.asarray(rows)
    shrink, active, _ = _posterior_terms(rows, gains, tau_sq, activity_prob)
    return (shrink * active)[..., None] * rows


def denoise_jacobian_trace_mean(
    rows: ComplexMatrix, gains: FloatArray, tau_sq: float, activity_prob: float
) -> ComplexMatrix:
    """Row-averaged Jacobian ⟨η′⟩ with entry [j, k] = ∂η_k/∂x̃_j (Wirtinger, x̃* held fixed).

    η(x̃) = c(‖x̃‖²)·x̃ so each row contributes c·I + c′·conj(x̃)ᵀx̃ with
    c′ = θ/(1+θ)·π(1−π)·Δ, π being the posterior activity probability.
    """
    _check(tau_sq, activity_prob)
    rows = np.atleast_2d(np.asarray(rows))
    gains = np.broadcast_to(np.asarray(gains, dtype=float), rows.shape[:1])
    shrink, active, delta = _posterior_terms(rows, gains, tau_sq, activity_prob)
    scale = shrink * active
    slope = shrink * active * (1 - active) * delta
    k, m = rows.shape
    return np.mean(scale) * np.eye(m) + rows.conj().T @ (slope[:, None] * rows) / k
