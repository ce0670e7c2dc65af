import math

import numpy as np
import pytest

import robustgd as rg


def test_constant_schedule_values():
    s = rg.constant_schedule(4, 1.0)
    assert np.array_equal(s.gammas, np.full(4, 1.0 / 18.0))
    assert np.array_equal(s.betas, np.zeros(4))
    s2 = rg.constant_schedule(6, 2.0)
    assert np.all(s2.gammas == 1.0 / 36.0)
    assert np.all(s2.betas == 0.0)
    with pytest.raises(ValueError):
        rg.constant_schedule(1, 1.0)


def test_two_phase_schedule_values():
    s = rg.two_phase_schedule(4, 1.0, 1.0)
    assert s.switch == 2
    assert s.betas[0] == 1.0  # first update is zero by construction
    assert np.all(s.gammas[: s.switch] == 1.0 / 18.0)
    assert s.gammas[2] == 1.0 / (18.0 + 1.0 / 6.0)
    assert s.gammas[3] == 1.0 / (18.0 + 2.0 / 6.0)
    assert s.gammas[2] == pytest.approx(6.0 / 109.0, rel=1e-15)
    assert s.gammas[3] == pytest.approx(3.0 / 55.0, rel=1e-15)


def test_two_phase_momentum_coupling():
    L = 1.6
    s = rg.two_phase_schedule(501, L, 0.9)
    # the coupling 1 - beta_{t+1} = 18 L gamma_t, stored exactly as defined
    assert np.array_equal(s.betas[1:], 1.0 - 18.0 * L * s.gammas[:-1])
    assert np.allclose(1.0 - s.betas[1:], 18.0 * L * s.gammas[:-1], rtol=1e-12)
    assert np.all(s.betas >= 0.0) and np.all(s.betas <= 1.0)


def test_two_phase_gammas_monotone_and_bounded():
    L = 2.5
    s = rg.two_phase_schedule(1001, L, 1.0)
    assert np.all(np.diff(s.gammas) <= 0.0)
    assert np.all(s.gammas > 0.0)
    assert np.all(s.gammas <= 1.0 / (18.0 * L))


def test_schedule_selection_boundary():
    assert rg.pick_schedule_kind(54, 1.0, 1.0) == "constant"
    assert rg.pick_schedule_kind(55, 1.0, 1.0) == "two_phase"
    assert rg.pick_schedule_kind(100, 10.0, 1.0) == "constant"  # 54 L/mu = 540
    assert rg.auto_schedule(54, 1.0, 1.0).provenance == "constant"
    assert rg.auto_schedule(55, 1.0, 1.0).provenance == "two_phase"


def test_generic_steps_flat_case():
    steps = rg.two_phase_steps(1.0, 10.0, 10)  # T <= b/a
    assert np.all(steps == 0.1)


def test_generic_steps_two_phase_case():
    steps = rg.two_phase_steps(1.0, 2.0, 8)
    assert np.all(steps[:4] == 0.5)
    assert steps[4] == pytest.approx(0.4, rel=1e-15)  # 1/(2 + 1/2)
    with pytest.raises(ValueError):
        rg.two_phase_steps(2.0, 1.0, 8)
    with pytest.raises(ValueError):
        rg.two_phase_steps(1.0, 2.0, 1)


def test_recursion_check_geometric_case():
    # c = d = 0 in the flat regime: the recursion is exactly geometric
    a, b, T, r0 = 1.0, 10.0, 10, 3.0
    out = rg.check_recursion_bound(a, b, 0.0, 0.0, r0, T)
    assert out.r_final == pytest.approx(r0 * (1 - a / b) ** T, rel=1e-12)
    assert out.r_final <= r0 * math.exp(-a * T / b)
    assert out.holds


def test_recursion_check_drift_only_grid():
    for a in (0.5, 1.0):
        for d in (0.1, 1.0, 10.0):
            for T in (2, 17, 400):
                out = rg.check_recursion_bound(a, 4.0 * a, 0.0, d, 0.0, T)
                assert out.holds
                assert out.r_final <= 3.0 * d / a


def test_recursion_check_example():
    out = rg.check_recursion_bound(1.0, 3.0, 1.0, 0.0, 1.0, 100)
    assert out.holds


def test_recursion_check_validates_inputs():
    with pytest.raises(ValueError):
        rg.check_recursion_bound(1.0, 2.0, -1.0, 0.0, 1.0, 10)
