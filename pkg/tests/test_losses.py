import numpy as np
import pytest

import robustgd as rg
from robustgd.losses import CapabilityError


def test_quadratic_loss_values():
    assert rg.quadratic_loss([0.0], [0.0], 1.0) == 0.0
    assert rg.quadratic_loss([2.0], [0.0], 1.0) == 1.0
    assert rg.quadratic_loss([1.0, 1.0], [0.0, 0.0], 2.0) == 1.0


def test_quadratic_grad_values():
    assert np.array_equal(rg.quadratic_grad([3.0, -1.0], [3.0, -1.0], 2.0), [0.0, 0.0])
    assert np.array_equal(rg.quadratic_grad([2.0], [0.0], 1.0), [1.0])
    assert np.array_equal(rg.quadratic_grad([0.0], [4.0], 1.0), [-2.0])


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        rg.quadratic_loss([1.0, 2.0], [1.0], 1.0)
    with pytest.raises(ValueError):
        rg.quadratic_grad([1.0], [1.0, 2.0], 1.0)


def test_source_factories_validate():
    with pytest.raises(ValueError):
        rg.dirac([np.nan])
    with pytest.raises(ValueError):
        rg.two_point(0.0, 1.5, 1.0)
    with pytest.raises(ValueError):
        rg.empirical(np.empty((0, 1)))
    with pytest.raises(ValueError):
        rg.gaussian(0.0, -1.0)


def test_source_moments():
    assert rg.dirac([1.0, 2.0]).variance_trace() == 0.0
    tp = rg.two_point(0.0, 0.25, 4.0)
    assert tp.mean()[0] == 3.0
    assert tp.variance_trace() == pytest.approx(0.25 * 0.75 * 16.0)
    emp = rg.empirical([0.0, 4.0])
    assert emp.mean()[0] == 2.0
    assert emp.variance_trace() == 4.0
    g = rg.gaussian([0.0, 0.0], 2.0)
    assert g.variance_trace() == 4.0  # per-coordinate variance, d = 2


def test_local_expected_loss_examples():
    loss = rg.QuadraticLoss(1.0)
    inst = rg.problem_instance(
        loss,
        [rg.dirac(3.0), rg.empirical([0.0, 4.0]), rg.two_point(0.0, 1.0, 99.0)],
        [0, 1, 2],
    )
    assert rg.local_expected_loss(inst, 0, [1.0]) == pytest.approx(1.0)  # (1/4)*4
    # average of the per-point losses: ((1/4)*0 + (1/4)*16)/2 = 2
    assert rg.local_expected_loss(inst, 1, [0.0]) == pytest.approx(2.0)
    assert rg.local_expected_loss(inst, 2, [0.0]) == 0.0


def test_honest_global_loss_and_minimizer():
    loss = rg.QuadraticLoss(1.0)
    zeros = rg.problem_instance(loss, [rg.dirac(0.0)] * 4, range(4))
    assert rg.honest_global_loss(zeros, [0.0]) == 0.0
    assert np.array_equal(rg.honest_global_grad(zeros, [0.0]), [0.0])

    # honest means {0, 0, 0, 4}: minimizer is their mean
    inst = rg.problem_instance(
        loss, [rg.dirac(0.0)] * 3 + [rg.dirac(4.0), rg.dirac(7.0)], range(4))
    assert inst.theta_star()[0] == 1.0
    assert inst.f == 1


def test_heterogeneous_construction_optimum_value():
    # shifted-cluster instance, second labeling: the optimum value has the
    # closed form ((n-2f)/(n-f)) * zeta^2 / mu
    n, f, zeta, mu = 5, 1, 1.3, 0.7
    inst = rg.heterogeneous_dirac_instance(n, f, zeta, mu, labeling=2)
    expected = ((n - 2 * f) / (n - f)) * zeta**2 / mu
    assert inst.q_star() == pytest.approx(expected, rel=1e-12)


def test_verify_assumptions_homogeneous():
    inst = rg.problem_instance(rg.QuadraticLoss(2.0), [rg.dirac(1.5)] * 6, range(6))
    c = rg.verify_assumptions(inst)
    assert c.zeta_sq == 0.0 and c.sigma_sq == 0.0
    assert c.L == 2.0 and c.mu == 2.0


def test_verify_assumptions_heterogeneous_value():
    n, f, zeta, mu = 7, 2, 0.9, 1.4
    inst = rg.heterogeneous_dirac_instance(n, f, zeta, mu, labeling=2)
    c = rg.verify_assumptions(inst)
    expected = ((n - 2 * f) / (n - f)) * zeta**2
    assert c.zeta_sq == pytest.approx(expected, rel=1e-12)
    assert c.zeta_sq <= zeta**2


def test_verify_assumptions_spiked_source_value():
    n, f, horizon, sigma, mu = 4, 1, 8, 1.5, 2.0
    pair = rg.hidden_spike_pair(n, f, horizon, sigma, mu)
    c = rg.verify_assumptions(pair.spiked)
    expected = sigma**2 * (1.0 - 2.0 * f / (n * horizon))
    assert c.sigma_sq == pytest.approx(expected, rel=1e-12)
    assert c.sigma_sq <= sigma**2


def test_verify_assumptions_rejects_unknown_loss():
    class CubicLoss:
        mu = 1.0

    inst = rg.problem_instance(rg.QuadraticLoss(1.0), [rg.dirac(0.0)], [0])
    object.__setattr__(inst, "loss", CubicLoss())
    with pytest.raises(CapabilityError):
        rg.verify_assumptions(inst)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    inst = rg.problem_instance(
        rg.QuadraticLoss(1.7),
        [rg.dirac(rng.normal(size=3)) for _ in range(4)]
        + [rg.gaussian(rng.normal(size=3), 0.5)],
        range(4),
    )
    h = 1e-6
    for _ in range(10):
        theta = rng.uniform(-3, 3, size=3)
        grad = rg.honest_global_grad(inst, theta)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fd = (rg.honest_global_loss(inst, theta + e)
                  - rg.honest_global_loss(inst, theta - e)) / (2 * h)
            assert fd == pytest.approx(grad[k], rel=1e-6, abs=1e-9)


def test_pl_identity_holds_with_equality():
    rng = np.random.default_rng(3)
    mu = 2.3
    inst = rg.problem_instance(
        rg.QuadraticLoss(mu),
        [rg.empirical(rng.normal(size=(4, 2))) for _ in range(5)],
        range(4),
    )
    q_star = inst.q_star()
    for _ in range(20):
        theta = rng.uniform(-5, 5, size=2)
        grad = rg.honest_global_grad(inst, theta)
        lhs = float(grad @ grad)
        rhs = mu * (rg.honest_global_loss(inst, theta) - q_star)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_instance_validation():
    loss = rg.QuadraticLoss(1.0)
    with pytest.raises(ValueError):
        rg.problem_instance(loss, [rg.dirac(0.0)] * 4, [0, 1])  # f = 2 = n/2
    with pytest.raises(ValueError):
        rg.problem_instance(loss, [rg.dirac(0.0), rg.dirac([0.0, 1.0])], [0, 1])
    with pytest.raises(ValueError):
        rg.problem_instance(loss, [], [])
