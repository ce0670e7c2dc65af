import numpy as np
import pytest

import robustgd as rg
from robustgd.algorithms import make_run_config
from robustgd.schedules import Schedule


def _honest_workers(instance):
    return [rg.HonestWorker(s) for s in instance.sources]


def _gd_schedule(T, gamma):
    # plain gradient descent: fixed step, no momentum
    return Schedule(np.full(T, gamma), np.zeros(T), T, "constant")


def test_one_step_convergence_at_exact_step():
    # gradient (mu/2)(theta - x): step 2/mu cancels the offset in one update
    mu = 2.0
    inst = rg.problem_instance(rg.QuadraticLoss(mu), [rg.dirac(3.0)] * 3, range(3))
    cfg = make_run_config(inst, _honest_workers(inst),
                          rg.AggregatorSpec("trimmed_mean", 0), 2, theta0=[-7.0],
                          schedule=_gd_schedule(2, 2.0 / mu))
    res = rg.run_robust_dsgd(cfg)
    assert res.theta_final[0] == 3.0
    assert res.final_gap == 0.0
    assert res.trace[1].loss_gap == 0.0  # already optimal after step one


def test_identical_workers_match_single_worker_gd():
    # all workers identical: every momentum coincides and the trimmed mean
    # returns it, so the trajectory is bitwise the scalar recursion
    mu, T = 1.0, 300
    sched = rg.two_phase_schedule(T, mu, mu)
    inst = rg.problem_instance(rg.QuadraticLoss(mu), [rg.dirac(1.0)] * 5, range(5))
    cfg = make_run_config(inst, _honest_workers(inst),
                          rg.AggregatorSpec("trimmed_mean", 2), T, theta0=[4.0],
                          schedule=sched)
    res = rg.run_robust_dsgd(cfg)

    theta, m = 4.0, 0.0
    for t in range(T):
        m = sched.betas[t] * m + (1 - sched.betas[t]) * (mu / 2.0) * (theta - 1.0)
        theta = theta - sched.gammas[t] * m
    assert res.theta_final[0] == theta


def test_fixed_seed_runs_are_bit_identical():
    inst = rg.problem_instance(
        rg.QuadraticLoss(1.0), [rg.gaussian(0.0, 1.0)] * 4, range(4))
    sched = rg.two_phase_schedule(100, 1.0, 1.0)

    def run(seed):
        cfg = make_run_config(inst, _honest_workers(inst),
                              rg.AggregatorSpec("trimmed_mean", 0), 100,
                              theta0=[2.0], seed=seed, schedule=sched)
        return rg.run_robust_dsgd(cfg)

    a, b, c = run(5), run(5), run(6)
    assert a.theta_final[0] == b.theta_final[0]
    assert a.trace == b.trace
    assert a.theta_final[0] != c.theta_final[0]


def test_fully_poisoned_equals_honest_with_swapped_source():
    # protocol-identical behavior: only the sampling distribution differs
    src = rg.gaussian(2.0, 1.0)
    inst = rg.problem_instance(rg.QuadraticLoss(1.0), [src] * 4, range(4))
    sched = rg.two_phase_schedule(80, 1.0, 1.0)

    def run(worker1):
        workers = _honest_workers(inst)
        workers[1] = worker1
        cfg = make_run_config(inst, workers, rg.AggregatorSpec("trimmed_mean", 0),
                              80, theta0=[0.0], seed=3, schedule=sched)
        return rg.run_robust_dsgd(cfg)

    a = run(rg.HonestWorker(src))
    b = run(rg.PoisonedWorker(src))
    assert a.theta_final[0] == b.theta_final[0]
    assert a.trace == b.trace


def test_trace_matches_schedule_and_length():
    T = 60
    sched = rg.two_phase_schedule(T, 1.0, 1.0)
    inst = rg.problem_instance(rg.QuadraticLoss(1.0), [rg.dirac(1.0)] * 3, range(3))
    cfg = make_run_config(inst, _honest_workers(inst),
                          rg.AggregatorSpec("trimmed_mean", 0), T, theta0=[0.0],
                          schedule=sched)
    res = rg.run_robust_dsgd(cfg)
    assert len(res.trace) == T
    assert [r.t for r in res.trace] == list(range(T))
    assert np.array_equal([r.gamma for r in res.trace], sched.gammas)
    assert np.array_equal([r.beta for r in res.trace], sched.betas)


def test_server_is_identity_blind():
    # permuting the message rows never changes the aggregate
    rng = np.random.default_rng(12)
    messages = rng.normal(size=(7, 3))
    base = rg.coordinate_trimmed_mean(messages, 2)
    for _ in range(10):
        perm = rng.permutation(7)
        assert np.array_equal(rg.coordinate_trimmed_mean(messages[perm], 2), base)
        assert np.allclose(rg.average(messages[perm]), rg.average(messages),
                           rtol=1e-12)


def test_baseline_without_attackers_equals_robust_trim_zero():
    inst = rg.problem_instance(
        rg.QuadraticLoss(1.0), [rg.gaussian(1.0, 0.5)] * 4, range(4))
    sched = rg.two_phase_schedule(70, 1.0, 1.0)
    workers = _honest_workers(inst)
    robust = rg.run_robust_dsgd(make_run_config(
        inst, workers, rg.AggregatorSpec("trimmed_mean", 0), 70,
        theta0=[0.0], seed=1, schedule=sched))
    base = rg.run_averaging_baseline(make_run_config(
        inst, workers, rg.AggregatorSpec("average"), 70,
        theta0=[0.0], seed=1, schedule=sched))
    assert robust.theta_final[0] == base.theta_final[0]
    assert robust.trace == base.trace


def test_baseline_fixed_vector_shift_is_linear():
    # honest workers start at the optimum, so the first average equals the
    # attacker's n*c vector divided by n and theta moves by exactly gamma*c
    n, c, gamma, T = 5, 3.0, 0.1, 10
    inst = rg.problem_instance(rg.QuadraticLoss(1.0), [rg.dirac(0.0)] * n, range(4))
    workers = _honest_workers(inst)[:4] + [
        rg.ByzantineWorker(rg.FixedVector(np.array([n * c])))]
    cfg = make_run_config(inst, workers, rg.AggregatorSpec("average"), T,
                          theta0=[0.0], schedule=_gd_schedule(T, gamma))
    res = rg.run_averaging_baseline(cfg)
    assert res.trace[1].loss_gap == pytest.approx(((gamma * c) ** 2) / 4.0, rel=1e-12)


def test_baseline_sign_flip_exact_stall():
    # one attacker sending -(n-f) times the honest average cancels the sum
    n = 5
    inst = rg.problem_instance(rg.QuadraticLoss(1.0), [rg.dirac(1.0)] * n, range(4))
    workers = _honest_workers(inst)[:4] + [rg.ByzantineWorker(rg.SignFlip(scale=4.0))]
    cfg = make_run_config(inst, workers, rg.AggregatorSpec("average"), 50,
                          theta0=[10.0], schedule=_gd_schedule(50, 0.05))
    res = rg.run_averaging_baseline(cfg)
    assert res.theta_final[0] == 10.0  # never moved


def test_divergence_guard_reports_iteration():
    inst = rg.problem_instance(rg.QuadraticLoss(1.0), [rg.dirac(0.0)] * 3, range(3))
    workers = _honest_workers(inst)[:2] + [rg.ByzantineWorker(rg.FixedVector(np.array([1e16])))]
    cfg = make_run_config(inst, workers, rg.AggregatorSpec("average"), 100,
                          theta0=[0.0], schedule=_gd_schedule(100, 1.0))
    with pytest.raises(rg.DivergenceError) as err:
        rg.run_averaging_baseline(cfg)
    assert err.value.iteration == 0


def test_dgd_without_corruption_is_exact_gd():
    # b = 0, f = 0: the update direction is the exact honest gradient
    rng = np.random.default_rng(5)
    datasets = [rng.normal(loc=i, size=(6, 1)) for i in range(3)]
    inst = rg.problem_instance(rg.QuadraticLoss(1.0),
                               [rg.empirical(d) for d in datasets], range(3))
    workers = [rg.PartiallyPoisonedWorker(d.copy(), (), 0) for d in datasets]
    T, gamma = 40, 1.0
    cfg = make_run_config(inst, workers, rg.AggregatorSpec("trimmed_mean", 0), T,
                          theta0=[5.0], gamma=gamma)
    res = rg.run_robust_dgd(cfg)

    theta = np.array([5.0])
    for _ in range(T):
        theta = theta - gamma * rg.honest_global_grad(inst, theta)
    assert res.theta_final[0] == pytest.approx(theta[0], rel=1e-12, abs=1e-15)
    # per-step contraction at least the PL modulus rate (mu/2 for quadratics)
    gaps = [r.loss_gap for r in res.trace]
    mu_pl = inst.loss.mu / 2.0
    for t in range(1, 8):
        assert gaps[t] <= (1.0 - mu_pl * gamma) ** 2 * gaps[t - 1] + 1e-15


def test_dgd_single_worker_outlier_always_trimmed():
    # one corrupted point far out: locally trimmed away at every step, so
    # the trajectory equals clean gradient descent on the honest points
    points = np.array([[0.0], [0.0], [0.0], [0.0], [1e6]])
    inst = rg.problem_instance(rg.QuadraticLoss(1.0),
                               [rg.empirical(points[:4])], [0])
    worker = rg.PartiallyPoisonedWorker(points, (4,), 1)
    T, gamma = 30, 1.0
    cfg = make_run_config(inst, [worker], rg.AggregatorSpec("trimmed_mean", 0), T,
                          theta0=[8.0], gamma=gamma)
    res = rg.run_robust_dgd(cfg)
    theta = 8.0
    for _ in range(T):
        theta = theta - gamma * (0.5 * theta)  # clean gradient on zeros
    assert res.theta_final[0] == theta


def test_dgd_identical_datasets_any_trim():
    points = np.full((5, 1), 2.0)
    inst = rg.problem_instance(rg.QuadraticLoss(1.0),
                               [rg.empirical(points)] * 5, range(5))
    workers = [rg.PartiallyPoisonedWorker(points.copy(), (), 0) for _ in range(5)]
    cfg = make_run_config(inst, workers, rg.AggregatorSpec("trimmed_mean", 2), 20,
                          theta0=[0.0], gamma=1.0)
    res = rg.run_robust_dgd(cfg)
    single = make_run_config(
        rg.problem_instance(rg.QuadraticLoss(1.0), [rg.empirical(points)], [0]),
        [rg.PartiallyPoisonedWorker(points.copy(), (), 0)],
        rg.AggregatorSpec("trimmed_mean", 0), 20, theta0=[0.0], gamma=1.0)
    assert res.theta_final[0] == rg.run_robust_dgd(single).theta_final[0]


def test_run_config_validation():
    inst = rg.problem_instance(rg.QuadraticLoss(1.0), [rg.dirac(0.0)] * 3, range(3))
    with pytest.raises(ValueError):
        make_run_config(inst, _honest_workers(inst)[:2],
                        rg.AggregatorSpec("average"), 10)
    with pytest.raises(ValueError):
        make_run_config(inst, _honest_workers(inst), rg.AggregatorSpec("average"), 1)
    with pytest.raises(ValueError):
        make_run_config(inst, _honest_workers(inst), rg.AggregatorSpec("average"),
                        10, schedule=rg.constant_schedule(5, 1.0))
    with pytest.raises(ValueError):
        make_run_config(inst, _honest_workers(inst), rg.AggregatorSpec("average"),
                        10, theta0=[1.0, 2.0])
    cfg = make_run_config(inst, _honest_workers(inst),
                          rg.AggregatorSpec("trimmed_mean", 1), 10,
                          schedule=rg.constant_schedule(10, 1.0))
    with pytest.raises(ValueError):
        rg.run_averaging_baseline(cfg)  # wrong aggregator kind
    with pytest.raises(ValueError):
        rg.run_robust_dgd(cfg)  # missing gamma
