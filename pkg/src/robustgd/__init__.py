"""Deterministic simulator for robust distributed first-order optimization
under worker corruption and data poisoning, with executable convergence
bounds and error floors."""

from .aggregation import (
    AggregatorSpec,
    average,
    coordinate_trimmed_mean,
    point_trim_robustness_coeff,
    trim_robustness_coeff,
)
from .algorithms import (
    DIVERGENCE_NORM,
    DivergenceError,
    RunConfig,
    RunResult,
    make_run_config,
    run_averaging_baseline,
    run_robust_dgd,
    run_robust_dsgd,
)
from .diagnostics import (
    IterationRecord,
    compute_deviation,
    compute_mean_drift,
    heterogeneity_floor,
    iteration_floor_reference,
    iteration_record,
    lyapunov_value,
    momentum_dsgd_bound,
    poisoning_floor,
    trimmed_dgd_bound,
)
from .harness import (
    ConfigError,
    build_experiment,
    execute_experiment,
    load_config,
    read_trace,
    run_experiment,
    write_trace,
)
from .losses import (
    AssumptionConstants,
    CapabilityError,
    ProblemInstance,
    QuadraticLoss,
    dirac,
    empirical,
    gaussian,
    honest_global_grad,
    honest_global_loss,
    local_expected_grad,
    local_expected_loss,
    problem_instance,
    quadratic_grad,
    quadratic_loss,
    two_point,
    verify_assumptions,
)
from .scenarios import (
    PoisonedDatasetScenario,
    SpikePair,
    heterogeneous_dirac_instance,
    hidden_spike_pair,
    poisoned_dataset_scenario,
)
from .schedules import (
    RecursionCheck,
    Schedule,
    auto_schedule,
    check_recursion_bound,
    constant_schedule,
    pick_schedule_kind,
    two_phase_schedule,
    two_phase_steps,
)
from .workers import (
    AntiTrimmedMean,
    ByzantineWorker,
    FixedVector,
    HonestWorker,
    InnerProductMax,
    PartiallyPoisonedWorker,
    PoisonedWorker,
    SignFlip,
    byzantine_message,
    draw_sample,
    honest_stochastic_gradient,
    local_trimmed_gradient,
    momentum_update,
    partially_poisoned_worker,
    worker_stream,
)

__version__ = "0.1.0"
