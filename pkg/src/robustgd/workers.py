"""Worker behaviors: honest stochastic-gradient/momentum workers, Byzantine
attack strategies, fully-poisoned source substitution, and partially
poisoned datasets aggregated with a local trimmed mean.

RNG contract: each (worker, step) pair draws from an independent stream
derived deterministically from (master seed, worker, step), so runs are
reproducible regardless of evaluation order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .aggregation import coordinate_trimmed_mean
from .losses import DataSource, Dirac, QuadraticLoss, _as_vector

__all__ = [
    "SignFlip",
    "FixedVector",
    "InnerProductMax",
    "AntiTrimmedMean",
    "Attack",
    "HonestWorker",
    "ByzantineWorker",
    "PoisonedWorker",
    "PartiallyPoisonedWorker",
    "WorkerSpec",
    "partially_poisoned_worker",
    "worker_stream",
    "draw_sample",
    "honest_stochastic_gradient",
    "momentum_update",
    "byzantine_message",
    "local_trimmed_gradient",
]


# ---------------------------------------------------------------------------
# Attacks (omniscient: they see all honest momenta of the current step)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignFlip:
    """Send -scale times the honest average."""

    scale: float = 1.0


@dataclass(frozen=True, eq=False)
class FixedVector:
    """Send the same vector every step."""

    vector: np.ndarray


@dataclass(frozen=True)
class InnerProductMax:
    """Send `magnitude` times the unit vector along the honest average."""

    magnitude: float


@dataclass(frozen=True)
class AntiTrimmedMean:
    """Send -magnitude times the unit vector along the trimmed mean of the
    honest momenta (aims directly against the server's robust estimate)."""

    magnitude: float


Attack = Union[SignFlip, FixedVector, InnerProductMax, AntiTrimmedMean]


def _unit(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    return v / norm if norm > 0.0 else np.zeros_like(v)


def byzantine_message(attack: Attack, honest_momenta, trim: int = 0) -> np.ndarray:
    """Vector a corrupted worker sends, given the honest workers' momenta.

    `trim` is the server's trimming parameter, used only by the
    anti-trimmed-mean strategy.
    """
    momenta = np.asarray(honest_momenta, dtype=float)
    if momenta.ndim == 1:
        momenta = momenta[:, None]
    if momenta.shape[0] == 0:
        raise ValueError("attack context needs at least one honest momentum")
    if isinstance(attack, SignFlip):
        return -attack.scale * momenta.mean(axis=0)
    if isinstance(attack, FixedVector):
        return attack.vector.astype(float)
    if isinstance(attack, InnerProductMax):
        return attack.magnitude * _unit(momenta.mean(axis=0))
    if isinstance(attack, AntiTrimmedMean):
        if attack.magnitude == 0.0:
            return np.zeros(momenta.shape[1])
        # clamp so the target stays computable when few honest workers remain
        usable = min(int(trim), (momenta.shape[0] - 1) // 2)
        return -attack.magnitude * _unit(coordinate_trimmed_mean(momenta, usable))
    raise TypeError(f"unknown attack {attack!r}")


# ---------------------------------------------------------------------------
# Worker specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HonestWorker:
    source: DataSource

    @property
    def sampling_source(self) -> DataSource:
        return self.source


@dataclass(frozen=True, eq=False)
class ByzantineWorker:
    attack: Attack


@dataclass(frozen=True, eq=False)
class PoisonedWorker:
    """Follows the protocol but samples from a substituted distribution."""

    substitute: DataSource

    @property
    def sampling_source(self) -> DataSource:
        return self.substitute


@dataclass(frozen=True, eq=False)
class PartiallyPoisonedWorker:
    """Holds a dataset whose `corrupted` rows were substituted before the
    run; reports full-batch gradients robustified with a local trim."""

    dataset: np.ndarray  # (m, d), corruption already materialized
    corrupted: tuple
    trim: int


WorkerSpec = Union[HonestWorker, ByzantineWorker, PoisonedWorker, PartiallyPoisonedWorker]


def partially_poisoned_worker(clean_points, corrupted_indices=(),
                              corrupted_values=None, trim: int = 0) -> PartiallyPoisonedWorker:
    """Materialize a poisoned dataset: rows at `corrupted_indices` are
    replaced by `corrupted_values` (static poisoning, fixed before the run).
    """
    points = np.asarray(clean_points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    points = points.copy()
    corrupted = tuple(int(i) for i in corrupted_indices)
    if corrupted:
        values = np.asarray(corrupted_values, dtype=float)
        if values.ndim == 1 and points.shape[1] == 1:
            values = values[:, None]
        if values.shape != (len(corrupted), points.shape[1]):
            raise ValueError(
                f"corrupted_values must have shape ({len(corrupted)}, {points.shape[1]})"
            )
        points[list(corrupted)] = values
    m = points.shape[0]
    trim = int(trim)
    if m <= 2 * trim:
        raise ValueError(f"need m > 2*trim data points, got m={m}, trim={trim}")
    if len(corrupted) >= m / 2:
        raise ValueError("more than half the dataset is corrupted")
    if not np.isfinite(points).all():
        raise ValueError("dataset must have finite entries")
    return PartiallyPoisonedWorker(points, corrupted, trim)


# ---------------------------------------------------------------------------
# Sampling and local computations
# ---------------------------------------------------------------------------

def worker_stream(seed: int, worker: int, step: int) -> np.random.Generator:
    """Independent generator for one (worker, step) pair under a master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(worker, step)))


def draw_sample(source: DataSource, seed: int, worker: int, step: int) -> np.ndarray:
    if isinstance(source, Dirac):  # deterministic; skip stream setup
        return source.point
    return source.sample(worker_stream(seed, worker, step))


def honest_stochastic_gradient(loss: QuadraticLoss, source: DataSource, theta,
                               seed: int, worker: int, step: int) -> np.ndarray:
    """Gradient at one fresh sample; unbiased for the sampling distribution."""
    return loss.grad(theta, draw_sample(source, seed, worker, step))


def momentum_update(m_prev: np.ndarray, g: np.ndarray, beta: float) -> np.ndarray:
    """beta * m_prev + (1 - beta) * g."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"momentum coefficient must lie in [0, 1], got {beta}")
    return beta * m_prev + (1.0 - beta) * g


def local_trimmed_gradient(loss: QuadraticLoss, theta, dataset,
                           trim: int) -> np.ndarray:
    """Trimmed mean of the per-point gradients over a worker's full dataset."""
    theta = _as_vector(theta, "theta")
    points = np.asarray(dataset, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] <= 2 * trim:
        raise ValueError(
            f"need m > 2*trim data points, got m={points.shape[0]}, trim={trim}"
        )
    return coordinate_trimmed_mean(loss.grad(theta, points), trim)
