"""Step-size and momentum-coefficient schedules.

Two concrete schedules for the momentum algorithm (a flat one for short
horizons and a two-phase decaying one for long horizons), the generic
two-phase scheduler they both reduce to, and a brute-force recursion
oracle certifying the scheduler's closed-form envelope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_SCHEDULE_LEN",
    "Schedule",
    "constant_schedule",
    "two_phase_schedule",
    "pick_schedule_kind",
    "auto_schedule",
    "two_phase_steps",
    "RecursionCheck",
    "check_recursion_bound",
]

# schedules are materialized eagerly; keep memory explicit
MAX_SCHEDULE_LEN = 10**7


def _check_horizon(T: int) -> int:
    T = int(T)
    if T < 2:
        raise ValueError(f"horizon must satisfy T >= 2, got {T}")
    if T > MAX_SCHEDULE_LEN:
        raise ValueError(f"horizon {T} exceeds the schedule cap {MAX_SCHEDULE_LEN}")
    return T


@dataclass(frozen=True, eq=False)
class Schedule:
    """Materialized step sizes and momentum coefficients for one run.

    `switch` is the first step of the decaying phase (== len(gammas) when
    the schedule never decays).
    """

    gammas: np.ndarray
    betas: np.ndarray
    switch: int
    provenance: str

    def __len__(self) -> int:
        return len(self.gammas)


def constant_schedule(T: int, L: float) -> Schedule:
    """Flat schedule: gamma_t = 1/(18L), beta_t = 0."""
    T = _check_horizon(T)
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    gammas = np.full(T, 1.0 / (18.0 * L))
    return Schedule(gammas, np.zeros(T), T, "constant")


def two_phase_schedule(T: int, L: float, mu: float) -> Schedule:
    """Two-phase schedule: flat at 1/(18L) for the first half, then decaying
    as 1/(18L + (mu/6)(t - switch + 1)), with the momentum coefficient
    coupled to the previous step size via beta_t = 1 - 18L * gamma_{t-1}
    (gamma_{-1} = 0, hence beta_0 = 1 and the first model update is zero).
    """
    T = _check_horizon(T)
    if not (L > 0 and 0 < mu <= L):
        raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    switch = math.ceil(T / 2)
    t = np.arange(T)
    gammas = 1.0 / (18.0 * L + np.maximum(0.0, (mu / 6.0) * (t - switch + 1)))
    betas = np.empty(T)
    betas[0] = 1.0
    betas[1:] = 1.0 - 18.0 * L * gammas[:-1]
    return Schedule(gammas, betas, switch, "two_phase")


def pick_schedule_kind(T: int, L: float, mu: float) -> str:
    """Flat for short horizons (T <= 54 L/mu), two-phase otherwise."""
    if not (L > 0 and 0 < mu <= L):
        raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    return "constant" if T <= 54.0 * L / mu else "two_phase"


def auto_schedule(T: int, L: float, mu: float) -> Schedule:
    if pick_schedule_kind(T, L, mu) == "constant":
        return constant_schedule(T, L)
    return two_phase_schedule(T, L, mu)


def two_phase_steps(a: float, b: float, T: int) -> np.ndarray:
    """Generic scheduler: constant 1/b while T <= b/a, otherwise flat at 1/b
    for the first half and 1/(b + (a/2)(t - switch + 1)) afterwards.
    """
    if not (a > 0 and b > 0 and a < b):
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    T = _check_horizon(T)
    if T <= b / a:
        return np.full(T, 1.0 / b)
    switch = math.ceil(T / 2)
    t = np.arange(T)
    return 1.0 / (b + np.maximum(0.0, (a / 2.0) * (t - switch + 1)))


@dataclass(frozen=True)
class RecursionCheck:
    """Simulated terminal value of the contraction recursion vs its envelope."""

    r_final: float
    bound: float
    holds: bool


def check_recursion_bound(a: float, b: float, c: float, d: float,
                          r0: float, T: int) -> RecursionCheck:
    """Run r_{t+1} = (1 - a*gamma_t) r_t + c*gamma_t^2 + d*gamma_t at equality
    with the generic two-phase steps and compare the result against the
    closed-form envelope r0*exp(-aT/2b) + 18c/(a^2 T) + 3d/a.
    """
    if r0 < 0 or c < 0 or d < 0:
        raise ValueError("r0, c, d must be non-negative")
    gammas = two_phase_steps(a, b, T)
    r = float(r0)
    for g in gammas:
        r = (1.0 - a * g) * r + c * g * g + d * g
    bound = r0 * math.exp(-a * T / (2.0 * b)) + 18.0 * c / (a * a * T) + 3.0 * d / a
    return RecursionCheck(r, bound, r <= bound * (1.0 + 1e-12))
