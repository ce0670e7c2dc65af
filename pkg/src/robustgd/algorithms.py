"""Training loops: momentum DSGD with server-side trimmed mean, full-batch
DGD with local and global trimmed means, and the plain-averaging baseline.

The server is oblivious to worker identity: it consumes one message per
worker in index order and aggregates. Evaluation against the honest
average loss uses the instance's declared honest set, which only the
diagnostics layer may see.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .aggregation import AggregatorSpec, aggregate, trim_robustness_coeff
from .diagnostics import IterationRecord, iteration_record
from .losses import ProblemInstance, honest_global_loss, _as_vector
from .schedules import Schedule
from .workers import (
    ByzantineWorker,
    HonestWorker,
    PartiallyPoisonedWorker,
    PoisonedWorker,
    byzantine_message,
    draw_sample,
    local_trimmed_gradient,
)

__all__ = [
    "DIVERGENCE_NORM",
    "DivergenceError",
    "RunConfig",
    "RunResult",
    "run_robust_dsgd",
    "run_robust_dgd",
    "run_averaging_baseline",
]

DIVERGENCE_NORM = 1e12


class DivergenceError(RuntimeError):
    """Model left the finite trust region; carries the offending iteration."""

    def __init__(self, iteration: int, norm: float):
        super().__init__(
            f"model diverged at iteration {iteration} (norm {norm:.3e})"
        )
        self.iteration = iteration
        self.norm = norm


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Inputs for one simulated run.

    `schedule` drives the momentum loop; `gamma` is the fixed step of the
    full-gradient loop. The declared f of the instance (n - |honest|) is
    what enters the diagnostic robustness coefficient.
    """

    instance: ProblemInstance
    workers: tuple
    aggregator: AggregatorSpec
    T: int
    theta0: np.ndarray
    seed: int = 0
    schedule: Optional[Schedule] = None
    gamma: Optional[float] = None
    record_diagnostics: bool = True


def make_run_config(instance, workers, aggregator, T, theta0=None, seed=0,
                    schedule=None, gamma=None, record_diagnostics=True) -> RunConfig:
    workers = tuple(workers)
    if len(workers) != instance.n:
        raise ValueError(
            f"got {len(workers)} workers for an instance with {instance.n} sources"
        )
    T = int(T)
    if T < 2:
        raise ValueError(f"need T >= 2, got {T}")
    if theta0 is None:
        theta0 = np.zeros(instance.dim)
    theta0 = _as_vector(theta0, "theta0")
    if theta0.shape[0] != instance.dim:
        raise ValueError(f"theta0 has dim {theta0.shape[0]}, instance dim {instance.dim}")
    if schedule is not None and len(schedule) != T:
        raise ValueError(f"schedule length {len(schedule)} != T={T}")
    return RunConfig(instance, workers, aggregator, T, theta0, int(seed),
                     schedule, gamma, record_diagnostics)


@dataclass(frozen=True, eq=False)
class RunResult:
    theta_final: np.ndarray
    trace: tuple
    final_gap: float


def _guard(theta: np.ndarray, t: int):
    norm = float(np.linalg.norm(theta))
    if not np.isfinite(norm) or norm > DIVERGENCE_NORM:
        raise DivergenceError(t, norm)


def _finish(config: RunConfig, theta: np.ndarray, records: list) -> RunResult:
    gap = honest_global_loss(config.instance, theta) - config.instance.q_star()
    if gap < -1e-12:
        raise RuntimeError(f"negative final gap {gap}; broken instance constants")
    return RunResult(theta, tuple(records), gap)


def _momentum_loop(config: RunConfig) -> RunResult:
    inst = config.instance
    if config.schedule is None:
        raise ValueError("the momentum loop needs a schedule")
    gammas = config.schedule.gammas
    betas = config.schedule.betas
    honest_idx = inst.honest_indices()
    trim = config.aggregator.trim
    # the Lyapunov weight is the robustness coefficient of the rule in use
    lam = trim_robustness_coeff(inst.n, trim)

    samplers = []
    attackers = []
    for i, w in enumerate(config.workers):
        if isinstance(w, (HonestWorker, PoisonedWorker)):
            samplers.append((i, w.sampling_source))
        elif isinstance(w, ByzantineWorker):
            attackers.append((i, w.attack))
        else:
            raise ValueError(
                f"worker {i}: {type(w).__name__} is not valid for the momentum loop"
            )

    loss = inst.loss
    seed = config.seed
    theta = config.theta0.copy()
    momenta = np.zeros((inst.n, inst.dim))
    messages = np.zeros((inst.n, inst.dim))
    rows = np.array([i for i, _ in samplers], dtype=int)
    samples = np.empty((len(samplers), inst.dim))
    records: list[IterationRecord] = []

    for t in range(config.T):
        beta = betas[t]
        gamma = gammas[t]
        for r, (i, source) in enumerate(samplers):
            samples[r] = draw_sample(source, seed, i, t)
        if len(rows):
            grads = loss.grad(theta, samples)  # batched over sampler rows
            momenta[rows] = beta * momenta[rows] + (1.0 - beta) * grads
        honest_momenta = momenta[honest_idx]
        messages[:] = momenta
        for i, attack in attackers:
            messages[i] = byzantine_message(attack, honest_momenta, trim)
        if config.record_diagnostics:
            records.append(
                iteration_record(t, theta, honest_momenta, gamma, beta, inst, lam)
            )
        theta = theta - gamma * aggregate(messages, config.aggregator)
        _guard(theta, t)

    return _finish(config, theta, records)


def run_robust_dsgd(config: RunConfig) -> RunResult:
    """Momentum DSGD with trimmed-mean aggregation at the server."""
    if config.aggregator.kind != "trimmed_mean":
        raise ValueError("robust DSGD uses a trimmed-mean aggregator")
    return _momentum_loop(config)


def run_averaging_baseline(config: RunConfig) -> RunResult:
    """Same loop with plain averaging; breakable by a single corrupted worker."""
    if config.aggregator.kind != "average":
        raise ValueError("the baseline uses the average aggregator")
    return _momentum_loop(config)


def run_robust_dgd(config: RunConfig) -> RunResult:
    """Full-batch DGD where every worker trims its per-point gradients and
    the server trims across workers; deterministic given the datasets."""
    inst = config.instance
    if config.gamma is None:
        raise ValueError("the full-gradient loop needs a fixed step gamma")
    if config.aggregator.kind != "trimmed_mean":
        raise ValueError("robust DGD uses a trimmed-mean aggregator")
    gamma = float(config.gamma)
    honest_idx = inst.honest_indices()
    trim = config.aggregator.trim
    lam = trim_robustness_coeff(inst.n, trim)

    locals_ = []
    attackers = []
    for i, w in enumerate(config.workers):
        if isinstance(w, PartiallyPoisonedWorker):
            locals_.append((i, w))
        elif isinstance(w, ByzantineWorker):
            attackers.append((i, w.attack))
        else:
            raise ValueError(
                f"worker {i}: the full-gradient loop takes partially poisoned "
                f"or Byzantine workers, got {type(w).__name__}"
            )

    loss = inst.loss
    theta = config.theta0.copy()
    messages = np.zeros((inst.n, inst.dim))
    records: list[IterationRecord] = []

    for t in range(config.T):
        for i, w in locals_:
            messages[i] = local_trimmed_gradient(loss, theta, w.dataset, w.trim)
        honest_msgs = messages[honest_idx]
        for i, attack in attackers:
            messages[i] = byzantine_message(attack, honest_msgs, trim)
        if config.record_diagnostics:
            records.append(
                iteration_record(t, theta, honest_msgs, gamma, 0.0, inst, lam)
            )
        theta = theta - gamma * aggregate(messages, config.aggregator)
        _guard(theta, t)

    return _finish(config, theta, records)
