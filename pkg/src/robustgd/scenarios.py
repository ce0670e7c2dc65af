"""Generators for the adversarial constructions behind the error floors,
packaged as ready-to-run problem instances with ground-truth constants.

Each generator returns fully labeled instances (which workers are honest)
so paired executions can run with identical seeds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import (
    ProblemInstance,
    QuadraticLoss,
    dirac,
    empirical,
    problem_instance,
    two_point,
)
from .workers import PartiallyPoisonedWorker

__all__ = [
    "heterogeneous_dirac_instance",
    "SpikePair",
    "hidden_spike_pair",
    "PoisonedDatasetScenario",
    "poisoned_dataset_scenario",
]


def heterogeneous_dirac_instance(n: int, f: int, zeta: float, mu: float,
                                 labeling: int = 1) -> ProblemInstance:
    """Two clusters of point masses: n-f workers at 0 and f workers at
    (2 zeta/mu) sqrt((n-f)/f).

    The two labelings assign honesty to indistinguishable executions:
    labeling 1 marks the zero cluster honest; labeling 2 marks the first
    n-2f zeros plus the shifted cluster honest. Any single output must be
    wrong in one of them by at least (f/(n-f)) zeta^2/(4 mu).
    """
    n, f = int(n), int(f)
    if not 0 < f < n / 2:
        raise ValueError(f"need 0 < f < n/2, got n={n}, f={f}")
    if not (zeta > 0 and mu > 0):
        raise ValueError("zeta and mu must be positive")
    if labeling not in (1, 2):
        raise ValueError(f"labeling must be 1 or 2, got {labeling}")
    shifted = (2.0 * zeta / mu) * math.sqrt((n - f) / f)
    sources = [dirac(0.0) for _ in range(n - f)] + [dirac(shifted) for _ in range(f)]
    if labeling == 1:
        honest = range(n - f)
    else:
        honest = list(range(n - 2 * f)) + list(range(n - f, n))
    return problem_instance(QuadraticLoss(mu), sources, honest)


@dataclass(frozen=True, eq=False)
class SpikePair:
    """Two instances a T-step run cannot tell apart: all honest sources are
    a point mass at zero vs a rare-spike two-point source with the same
    variance budget, whose means differ by `mean_gap`."""

    clean: ProblemInstance
    spiked: ProblemInstance
    spike: float
    prob: float
    mean_gap: float


def hidden_spike_pair(n: int, f: int, horizon: int, sigma: float,
                      mu: float) -> SpikePair:
    """Build the pair for a horizon-step run with f of n corrupted workers:
    the spike (2 sigma/mu) sqrt(horizon n/(2f)) occurs with probability
    2f/(n*horizon), so the per-gradient noise stays within sigma^2."""
    n, f, horizon = int(n), int(f), int(horizon)
    if not 0 < f < n / 2:
        raise ValueError(f"need 0 < f < n/2, got n={n}, f={f}")
    if not (sigma >= 0 and mu > 0 and horizon >= 1):
        raise ValueError("need sigma >= 0, mu > 0, horizon >= 1")
    prob = 2.0 * f / (n * horizon)
    if prob > 1.0:
        raise ValueError(f"spike probability 2f/(n*horizon) = {prob} exceeds 1")
    spike = (2.0 * sigma / mu) * math.sqrt(horizon * n / (2.0 * f))
    honest = range(n - f)
    clean = problem_instance(QuadraticLoss(mu), [dirac(0.0)] * n, honest)
    spiked_src = two_point(spike, prob, 0.0)
    spiked = problem_instance(QuadraticLoss(mu), [spiked_src] * n, honest)
    mean_gap = (2.0 * sigma / mu) * math.sqrt(2.0 * f / (n * horizon))
    return SpikePair(clean, spiked, spike, prob, mean_gap)


@dataclass(frozen=True, eq=False)
class PoisonedDatasetScenario:
    """Identical per-worker datasets with b planted outliers, plus the two
    honest-subset labelings used for the data-poisoning error floor.

    case1 treats the m-b zeros as honest (noise 0); case2 treats the last
    m-b points as honest (noise sigma^2 (m-2b)/(m-b), minimizer
    (2 sigma/mu) sqrt(b/(m-b))). Workers aggregate their per-point
    gradients with local trim b either way.
    """

    datasets: tuple
    outlier_value: float
    case1: ProblemInstance
    case2: ProblemInstance
    case1_corrupted: tuple
    case2_corrupted: tuple
    workers: tuple


def poisoned_dataset_scenario(n: int, f: int, m: int, b: int, sigma: float,
                              mu: float) -> PoisonedDatasetScenario:
    """m-b points at 0 and b points at (2 sigma/mu) sqrt((m-b)/b) for each
    of n workers; f of the n workers are declared corrupt (last indices)."""
    n, f, m, b = int(n), int(f), int(m), int(b)
    if not 0 < b < m / 2:
        raise ValueError(f"need 0 < b < m/2, got m={m}, b={b}")
    if not 0 <= f < n / 2:
        raise ValueError(f"need 0 <= f < n/2, got n={n}, f={f}")
    if not (sigma > 0 and mu > 0):
        raise ValueError("sigma and mu must be positive")
    value = (2.0 * sigma / mu) * math.sqrt((m - b) / b)
    points = np.zeros((m, 1))
    points[m - b :] = value
    honest = range(n - f)
    loss = QuadraticLoss(mu)
    case1 = problem_instance(loss, [empirical(points[: m - b])] * n, honest)
    case2 = problem_instance(loss, [empirical(points[b:])] * n, honest)
    workers = tuple(
        PartiallyPoisonedWorker(points.copy(), tuple(range(m - b, m)), b)
        for _ in range(n)
    )
    return PoisonedDatasetScenario(
        datasets=tuple(points.copy() for _ in range(n)),
        outlier_value=value,
        case1=case1,
        case2=case2,
        case1_corrupted=tuple(range(m - b, m)),
        case2_corrupted=tuple(range(b)),
        workers=workers,
    )
