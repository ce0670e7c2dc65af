"""Loss models, per-worker data sources, and exact loss/gradient oracles.

Everything here is closed form: the built-in loss family is quadratic and
every source kind has an analytic mean and covariance trace, so expected
losses, gradients, minimizers, and the standard optimization constants
(smoothness L, PL constant mu, gradient noise sigma^2, gradient
heterogeneity zeta^2) are computed exactly rather than sampled.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "CapabilityError",
    "Dirac",
    "TwoPoint",
    "Empirical",
    "Gaussian",
    "DataSource",
    "dirac",
    "two_point",
    "empirical",
    "gaussian",
    "QuadraticLoss",
    "quadratic_loss",
    "quadratic_grad",
    "ProblemInstance",
    "problem_instance",
    "local_expected_loss",
    "local_expected_grad",
    "honest_global_loss",
    "honest_global_grad",
    "AssumptionConstants",
    "verify_assumptions",
]


class CapabilityError(NotImplementedError):
    """Requested computation lies outside the built-in closed-form families."""


def _as_vector(x, name: str = "value") -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a scalar or 1-D vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must have finite entries")
    return arr


# ---------------------------------------------------------------------------
# Data sources
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dirac:
    """Point mass: every draw returns `point`."""

    point: np.ndarray

    @property
    def dim(self) -> int:
        return self.point.shape[0]

    def mean(self) -> np.ndarray:
        return self.point

    def variance_trace(self) -> float:
        return 0.0

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.point


@dataclass(frozen=True, eq=False)
class TwoPoint:
    """Bernoulli mixture of two points: `point_a` w.p. `prob_a`, else `point_b`."""

    point_a: np.ndarray
    prob_a: float
    point_b: np.ndarray

    @property
    def dim(self) -> int:
        return self.point_a.shape[0]

    def mean(self) -> np.ndarray:
        return self.prob_a * self.point_a + (1.0 - self.prob_a) * self.point_b

    def variance_trace(self) -> float:
        gap = self.point_a - self.point_b
        return self.prob_a * (1.0 - self.prob_a) * float(gap @ gap)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.point_a if rng.random() < self.prob_a else self.point_b


@dataclass(frozen=True, eq=False)
class Empirical:
    """Uniform distribution over a finite dataset, rows of `points`."""

    points: np.ndarray  # (m, d)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def variance_trace(self) -> float:
        centered = self.points - self.mean()
        return float(np.mean(np.sum(centered * centered, axis=1)))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.points[rng.integers(self.points.shape[0])]


@dataclass(frozen=True, eq=False)
class Gaussian:
    """Isotropic normal with per-coordinate variance `var` (trace = d * var)."""

    center: np.ndarray
    var: float

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def mean(self) -> np.ndarray:
        return self.center

    def variance_trace(self) -> float:
        return self.dim * self.var

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.center + np.sqrt(self.var) * rng.standard_normal(self.dim)


DataSource = Union[Dirac, TwoPoint, Empirical, Gaussian]


def dirac(point) -> Dirac:
    return Dirac(_as_vector(point, "point"))


def two_point(point_a, prob_a: float, point_b) -> TwoPoint:
    a = _as_vector(point_a, "point_a")
    b = _as_vector(point_b, "point_b")
    if a.shape != b.shape:
        raise ValueError("point_a and point_b must have the same dimension")
    if not 0.0 <= prob_a <= 1.0:
        raise ValueError(f"prob_a must lie in [0, 1], got {prob_a}")
    return TwoPoint(a, float(prob_a), b)


def empirical(points) -> Empirical:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError("empirical source needs at least one point, shape (m,) or (m, d)")
    if not np.isfinite(arr).all():
        raise ValueError("dataset must have finite entries")
    return Empirical(arr)


def gaussian(center, var: float) -> Gaussian:
    if var < 0:
        raise ValueError(f"variance must be non-negative, got {var}")
    return Gaussian(_as_vector(center, "center"), float(var))


# ---------------------------------------------------------------------------
# Quadratic loss family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticLoss:
    """Per-point loss (mu/4) * ||theta - x||^2 with gradient (mu/2)(theta - x).

    Stored constants follow the convention used throughout the bound
    formulas: L = mu (a valid, conservative Lipschitz constant; the exact
    one is mu/2) and the PL constant equals mu, for which the honest
    average loss satisfies ||grad||^2 = mu * (loss - min) exactly.
    """

    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")

    @property
    def L(self) -> float:
        return self.mu

    def loss(self, theta, x):
        return quadratic_loss(theta, x, self.mu)

    def grad(self, theta, x):
        return quadratic_grad(theta, x, self.mu)


def _check_dims(theta: np.ndarray, x: np.ndarray):
    if theta.shape[-1] != x.shape[-1]:
        raise ValueError(
            f"dimension mismatch: theta has d={theta.shape[-1]}, x has d={x.shape[-1]}"
        )


def quadratic_loss(theta, x, mu: float):
    """(mu/4) * ||theta - x||^2; broadcasts over leading axes of `x`."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_dims(np.atleast_1d(theta), np.atleast_1d(x))
    diff = theta - x
    return (mu / 4.0) * np.sum(diff * diff, axis=-1)


def quadratic_grad(theta, x, mu: float):
    """(mu/2) * (theta - x); broadcasts over leading axes of `x`."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_dims(np.atleast_1d(theta), np.atleast_1d(x))
    return (mu / 2.0) * (theta - x)


# ---------------------------------------------------------------------------
# Problem instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A loss, one data source per worker, and the declared honest subset.

    The honest subset is ground truth for evaluation and diagnostics only;
    server-side code never sees it.
    """

    loss: QuadraticLoss
    sources: tuple
    honest: frozenset
    dim: int

    @property
    def n(self) -> int:
        return len(self.sources)

    @property
    def f(self) -> int:
        return self.n - len(self.honest)

    def honest_indices(self) -> list:
        return sorted(self.honest)

    def theta_star(self) -> np.ndarray:
        """Minimizer of the honest average loss: mean of honest source means."""
        cached = self.__dict__.get("_theta_star")
        if cached is None:
            means = [self.sources[i].mean() for i in self.honest_indices()]
            cached = np.mean(means, axis=0)
            object.__setattr__(self, "_theta_star", cached)
        return cached

    def q_star(self) -> float:
        # memoized: diagnostics ask for this once per recorded iteration
        cached = self.__dict__.get("_q_star")
        if cached is None:
            cached = honest_global_loss(self, self.theta_star())
            object.__setattr__(self, "_q_star", cached)
        return cached


def problem_instance(loss: QuadraticLoss, sources, honest) -> ProblemInstance:
    sources = tuple(sources)
    if not sources:
        raise ValueError("instance needs at least one worker source")
    dim = sources[0].dim
    for i, s in enumerate(sources):
        if s.dim != dim:
            raise ValueError(f"source {i} has dim {s.dim}, expected {dim}")
    honest = frozenset(int(i) for i in honest)
    n = len(sources)
    if not honest or not honest <= set(range(n)):
        raise ValueError("honest set must be a non-empty subset of worker indices")
    f = n - len(honest)
    if not f < n / 2:
        raise ValueError(f"corrupted workers must satisfy f < n/2, got f={f}, n={n}")
    return ProblemInstance(loss, sources, honest, dim)


def local_expected_loss(instance: ProblemInstance, i: int, theta) -> float:
    """Exact expectation of the per-point loss under worker i's source.

    For the quadratic loss, E||theta - x||^2 = ||theta - E x||^2 + tr Cov(x),
    which is available in closed form for every built-in source kind.
    """
    src = instance.sources[i]
    mu = instance.loss.mu
    theta = _as_vector(theta, "theta")
    diff = theta - src.mean()
    return (mu / 4.0) * (float(diff @ diff) + src.variance_trace())


def local_expected_grad(instance: ProblemInstance, i: int, theta) -> np.ndarray:
    """Exact gradient of worker i's expected loss: (mu/2)(theta - mean)."""
    theta = _as_vector(theta, "theta")
    return (instance.loss.mu / 2.0) * (theta - instance.sources[i].mean())


def honest_global_loss(instance: ProblemInstance, theta) -> float:
    """Average of honest workers' expected losses at theta."""
    idx = instance.honest_indices()
    return float(np.mean([local_expected_loss(instance, i, theta) for i in idx]))


def honest_global_grad(instance: ProblemInstance, theta) -> np.ndarray:
    """Gradient of the honest average loss: (mu/2)(theta - honest mean of means)."""
    theta = _as_vector(theta, "theta")
    means = [instance.sources[i].mean() for i in instance.honest_indices()]
    return (instance.loss.mu / 2.0) * (theta - np.mean(means, axis=0))


def honest_gap(instance: ProblemInstance, theta) -> float:
    """Suboptimality gap of the honest average loss at theta.

    Uses the exact identity Q(theta) - Q* = (mu/4) ||theta - theta*||^2,
    which avoids the catastrophic cancellation of subtracting two O(1)
    loss values when the gap is many orders of magnitude smaller.
    """
    theta = _as_vector(theta, "theta")
    diff = theta - instance.theta_star()
    return (instance.loss.mu / 4.0) * float(diff @ diff)


# ---------------------------------------------------------------------------
# Assumption constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionConstants:
    """Exact smoothness / PL / noise / heterogeneity constants of an instance.

    sigma_sq is the worst honest worker's gradient covariance trace and
    zeta_sq the average squared deviation of honest local gradients from
    their mean; for the quadratic loss both are independent of theta.
    """

    L: float
    mu: float
    sigma_sq: float
    zeta_sq: float


def verify_assumptions(instance: ProblemInstance) -> AssumptionConstants:
    loss = instance.loss
    if not isinstance(loss, QuadraticLoss):
        raise CapabilityError(
            "closed-form assumption constants are only available for quadratic losses"
        )
    mu = loss.mu
    idx = instance.honest_indices()
    # gradient of a quadratic is (mu/2)(theta - x): its covariance is
    # (mu^2/4) * Cov(x), uniformly in theta
    sigma_sq = (mu * mu / 4.0) * max(instance.sources[i].variance_trace() for i in idx)
    means = np.stack([instance.sources[i].mean() for i in idx])
    centered = means - means.mean(axis=0)
    zeta_sq = (mu * mu / 4.0) * float(np.mean(np.sum(centered * centered, axis=1)))
    return AssumptionConstants(L=mu, mu=mu, sigma_sq=sigma_sq, zeta_sq=zeta_sq)
