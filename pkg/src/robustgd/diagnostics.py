"""Per-iteration diagnostic quantities and computable closed-form bounds.

Diagnostics have privileged access to the honest set and exact instance
constants; they are test instrumentation and never feed back into
server-side logic. Sample-path values are recorded; expectation-level
claims are checked via Monte Carlo means over seeds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import ProblemInstance, honest_global_grad, honest_global_loss

__all__ = [
    "IterationRecord",
    "TRACE_FIELDS",
    "compute_deviation",
    "compute_mean_drift",
    "lyapunov_value",
    "iteration_record",
    "momentum_dsgd_bound",
    "trimmed_dgd_bound",
    "heterogeneity_floor",
    "poisoning_floor",
    "iteration_floor_reference",
]

TRACE_FIELDS = (
    "t",
    "gamma",
    "beta",
    "loss_gap",
    "grad_norm_sq",
    "deviation_sq",
    "mean_drift_sq",
    "lyapunov",
)


@dataclass(frozen=True)
class IterationRecord:
    """One trace row: schedule values and diagnostics at the start of step t.

    lyapunov = loss_gap + rho * deviation_sq + rho * lam * mean_drift_sq
    with rho = 1/(12 L).
    """

    t: int
    gamma: float
    beta: float
    loss_gap: float
    grad_norm_sq: float
    deviation_sq: float
    mean_drift_sq: float
    lyapunov: float


def compute_deviation(honest_momenta, theta, instance: ProblemInstance) -> float:
    """Squared distance between the honest-momentum average and the true
    honest gradient at theta."""
    momenta = np.asarray(honest_momenta, dtype=float)
    if momenta.ndim == 1:
        momenta = momenta[:, None]
    diff = momenta.mean(axis=0) - honest_global_grad(instance, theta)
    return float(diff @ diff)


def compute_mean_drift(honest_momenta) -> float:
    """Average squared distance of honest momenta from their own mean."""
    momenta = np.asarray(honest_momenta, dtype=float)
    if momenta.ndim == 1:
        momenta = momenta[:, None]
    if momenta.shape[0] == 0:
        raise ValueError("need at least one honest worker")
    centered = momenta - momenta.mean(axis=0)
    return float(np.mean(np.sum(centered * centered, axis=1)))


def lyapunov_value(loss_gap: float, deviation_sq: float, mean_drift_sq: float,
                   L: float, lam: float) -> float:
    rho = 1.0 / (12.0 * L)
    return loss_gap + rho * deviation_sq + rho * lam * mean_drift_sq


def iteration_record(t: int, theta, honest_momenta, gamma: float, beta: float,
                     instance: ProblemInstance, lam: float) -> IterationRecord:
    gap = honest_global_loss(instance, theta) - instance.q_star()
    grad = honest_global_grad(instance, theta)
    dev = compute_deviation(honest_momenta, theta, instance)
    drift = compute_mean_drift(honest_momenta)
    return IterationRecord(
        t=t,
        gamma=float(gamma),
        beta=float(beta),
        loss_gap=gap,
        grad_norm_sq=float(grad @ grad),
        deviation_sq=dev,
        mean_drift_sq=drift,
        lyapunov=lyapunov_value(gap, dev, drift, instance.loss.L, lam),
    )


# ---------------------------------------------------------------------------
# Closed-form convergence bounds and error floors
# ---------------------------------------------------------------------------

def momentum_dsgd_bound(T: int, q0: float, kappa: float, lam: float,
                        sigma_sq: float, zeta_sq: float, mu: float,
                        n: int, f: int) -> float:
    """Upper bound on the expected loss gap of the momentum + trimmed-mean
    algorithm after T steps with the built-in schedules:

        (7/6) q0 e^{-T/(108 kappa)}
        + (lam + 1/(n-f)) * 4374 kappa sigma_sq / (T mu)
        + 9 lam zeta_sq / (2 mu).
    """
    T = int(T)
    if T < 1:
        raise ValueError(f"need T >= 1, got {T}")
    return (
        (7.0 / 6.0) * q0 * math.exp(-T / (108.0 * kappa))
        + (lam + 1.0 / (n - f)) * 4374.0 * kappa * sigma_sq / (T * mu)
        + 9.0 * lam * zeta_sq / (2.0 * mu)
    )


def trimmed_dgd_bound(T: int, q0: float, mu: float, L: float, lam: float,
                      lam_local: float, sigma_sq: float, zeta_sq: float) -> float:
    """Upper bound for the doubly trimmed full-gradient algorithm at step
    size 1/L:

        e^{-(mu/L) T} q0
        + (lam_local sigma_sq + 3 lam lam_local sigma_sq + 3 lam zeta_sq) / mu.
    """
    T = int(T)
    if T < 0:
        raise ValueError(f"need T >= 0, got {T}")
    floor = (lam_local * sigma_sq + 3.0 * lam * lam_local * sigma_sq
             + 3.0 * lam * zeta_sq) / mu
    return math.exp(-(mu / L) * T) * q0 + floor


def heterogeneity_floor(n: int, f: int, zeta_sq: float, mu: float) -> float:
    """Unavoidable error with f of n fully corrupted workers under gradient
    heterogeneity zeta_sq: (f/(n-f)) * zeta_sq / (4 mu)."""
    n, f = int(n), int(f)
    if f < 0 or n <= 2 * f:
        raise ValueError(f"need n > 2f >= 0, got n={n}, f={f}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return (f / (n - f)) * zeta_sq / (4.0 * mu)


def poisoning_floor(m: int, b: int, sigma_sq: float, mu: float) -> float:
    """Unavoidable error with b of m data points corrupted per worker:
    (sigma_sq/(4 mu)) * b/(m-b)."""
    m, b = int(m), int(b)
    if b < 0 or m <= b:
        raise ValueError(f"need m > b >= 0, got m={m}, b={b}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return (sigma_sq / (4.0 * mu)) * b / (m - b)


def iteration_floor_reference(n: int, f: int, sigma_sq: float, mu: float,
                              L: float, q0: float, eps: float) -> float:
    """Reference iteration count (1+f)/n * sigma_sq/(mu eps) + (L/mu) log(q0/eps).

    Reported as-is, without the absolute constant of the asymptotic
    statement; informational only, never asserted.
    """
    if not (eps > 0 and q0 > 0):
        raise ValueError("need q0 > 0 and eps > 0")
    return (1 + f) / n * sigma_sq / (mu * eps) + (L / mu) * math.log(q0 / eps)
