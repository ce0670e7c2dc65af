"""Experiment orchestration: structured config ingestion, seeded multi-run
execution, parameter sweeps, and machine-readable trace/summary output.

Configs are YAML mappings; traces are header-bearing CSV files and
summaries are JSON lines. For a fixed config and seed the trace bytes are
identical across re-runs and thread counts.
"""
from __future__ import annotations

import copy
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .aggregation import AggregatorSpec, point_trim_robustness_coeff, trim_robustness_coeff
from .algorithms import (
    DivergenceError,
    RunConfig,
    make_run_config,
    run_averaging_baseline,
    run_robust_dgd,
    run_robust_dsgd,
)
from .diagnostics import (
    TRACE_FIELDS,
    heterogeneity_floor,
    momentum_dsgd_bound,
    poisoning_floor,
    trimmed_dgd_bound,
)
from .losses import (
    QuadraticLoss,
    dirac,
    empirical,
    gaussian,
    honest_global_loss,
    problem_instance,
    two_point,
    verify_assumptions,
)
from .scenarios import (
    heterogeneous_dirac_instance,
    hidden_spike_pair,
    poisoned_dataset_scenario,
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
    partially_poisoned_worker,
)

__all__ = [
    "TRACE_SCHEMA",
    "SUMMARY_SCHEMA",
    "ConfigError",
    "ExperimentPoint",
    "load_config",
    "build_experiment",
    "execute_experiment",
    "run_experiment",
    "write_trace",
    "read_trace",
    "trace_path",
]

TRACE_SCHEMA = "robustgd-trace-v1"
SUMMARY_SCHEMA = "robustgd-summary-v1"

_RUNNERS = {
    "dsgd": run_robust_dsgd,
    "dgd": run_robust_dgd,
    "baseline": run_averaging_baseline,
}

_TOP_KEYS = {
    "name", "algorithm", "T", "seeds", "theta0", "schedule", "gamma",
    "aggregator", "instance", "workers", "sweep", "record_diagnostics",
    "output",
}


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        _fail(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed, path: str):
    unknown = set(node) - set(allowed)
    if unknown:
        _fail(path, f"unknown field(s) {sorted(unknown)}; allowed: {sorted(allowed)}")


def _get(node: dict, key: str, path: str, required: bool = True, default=None):
    if key not in node:
        if required:
            _fail(path, f"missing required field {key!r}")
        return default
    return node[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    return int(value)


def _choice(value, options, path: str) -> str:
    if value not in options:
        _fail(path, f"expected one of {sorted(options)}, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# Node parsers
# ---------------------------------------------------------------------------

def _parse_source(node, path: str):
    node = _mapping(node, path)
    kind = _choice(_get(node, "kind", path),
                   {"dirac", "two_point", "empirical", "gaussian"}, f"{path}.kind")
    try:
        if kind == "dirac":
            _check_keys(node, {"kind", "point"}, path)
            return dirac(_get(node, "point", path))
        if kind == "two_point":
            _check_keys(node, {"kind", "point_a", "prob_a", "point_b"}, path)
            return two_point(
                _get(node, "point_a", path),
                _number(_get(node, "prob_a", path), f"{path}.prob_a"),
                _get(node, "point_b", path),
            )
        if kind == "empirical":
            _check_keys(node, {"kind", "points"}, path)
            return empirical(_get(node, "points", path))
        _check_keys(node, {"kind", "mean", "var"}, path)
        return gaussian(
            _get(node, "mean", path),
            _number(_get(node, "var", path), f"{path}.var"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_attack(node, path: str):
    node = _mapping(node, path)
    kind = _choice(
        _get(node, "kind", path),
        {"sign_flip", "fixed_vector", "inner_product_max", "anti_trimmed_mean"},
        f"{path}.kind",
    )
    if kind == "sign_flip":
        _check_keys(node, {"kind", "scale"}, path)
        return SignFlip(_number(node.get("scale", 1.0), f"{path}.scale"))
    if kind == "fixed_vector":
        _check_keys(node, {"kind", "vector"}, path)
        vec = np.atleast_1d(np.asarray(_get(node, "vector", path), dtype=float))
        if not np.isfinite(vec).all():
            _fail(f"{path}.vector", "entries must be finite")
        return FixedVector(vec)
    if kind == "inner_product_max":
        _check_keys(node, {"kind", "magnitude"}, path)
        return InnerProductMax(_number(_get(node, "magnitude", path), f"{path}.magnitude"))
    _check_keys(node, {"kind", "magnitude"}, path)
    return AntiTrimmedMean(_number(_get(node, "magnitude", path), f"{path}.magnitude"))


def _parse_instance(node, path: str):
    """Returns (instance, default_workers_or_None, extras).

    `extras` carries scenario-level budgets that an instance alone cannot
    express (the zeta/sigma the construction was built for, and the data
    poisoning counts), used for floor reporting.
    """
    node = _mapping(node, path)
    kind = _choice(
        _get(node, "kind", path),
        {"explicit", "heterogeneous_dirac", "spike_pair", "poisoned_datasets"},
        f"{path}.kind",
    )
    try:
        if kind == "explicit":
            _check_keys(node, {"kind", "loss", "sources", "honest"}, path)
            loss_node = _mapping(_get(node, "loss", path), f"{path}.loss")
            _check_keys(loss_node, {"kind", "mu"}, f"{path}.loss")
            _choice(_get(loss_node, "kind", f"{path}.loss"), {"quadratic"},
                    f"{path}.loss.kind")
            loss = QuadraticLoss(_number(_get(loss_node, "mu", f"{path}.loss"),
                                         f"{path}.loss.mu"))
            raw_sources = _get(node, "sources", path)
            if not isinstance(raw_sources, list) or not raw_sources:
                _fail(f"{path}.sources", "expected a non-empty list")
            sources = [
                _parse_source(s, f"{path}.sources[{i}]") for i, s in enumerate(raw_sources)
            ]
            honest = _get(node, "honest", path)
            if not isinstance(honest, list):
                _fail(f"{path}.honest", "expected a list of worker indices")
            return problem_instance(loss, sources, honest), None, {}
        if kind == "heterogeneous_dirac":
            _check_keys(node, {"kind", "n", "f", "zeta", "mu", "labeling"}, path)
            zeta = _number(_get(node, "zeta", path), f"{path}.zeta")
            inst = heterogeneous_dirac_instance(
                _integer(_get(node, "n", path), f"{path}.n"),
                _integer(_get(node, "f", path), f"{path}.f"),
                zeta,
                _number(_get(node, "mu", path), f"{path}.mu"),
                _integer(node.get("labeling", 1), f"{path}.labeling"),
            )
            return inst, None, {"zeta_budget_sq": zeta**2}
        if kind == "spike_pair":
            _check_keys(node, {"kind", "n", "f", "horizon", "sigma", "mu", "variant"}, path)
            sigma = _number(_get(node, "sigma", path), f"{path}.sigma")
            pair = hidden_spike_pair(
                _integer(_get(node, "n", path), f"{path}.n"),
                _integer(_get(node, "f", path), f"{path}.f"),
                _integer(_get(node, "horizon", path), f"{path}.horizon"),
                sigma,
                _number(_get(node, "mu", path), f"{path}.mu"),
            )
            variant = _choice(node.get("variant", "spiked"), {"clean", "spiked"},
                              f"{path}.variant")
            inst = pair.clean if variant == "clean" else pair.spiked
            return inst, None, {"sigma_budget_sq": sigma**2}
        _check_keys(node, {"kind", "n", "f", "m", "b", "sigma", "mu", "case"}, path)
        sigma = _number(_get(node, "sigma", path), f"{path}.sigma")
        scenario = poisoned_dataset_scenario(
            _integer(_get(node, "n", path), f"{path}.n"),
            _integer(_get(node, "f", path), f"{path}.f"),
            _integer(_get(node, "m", path), f"{path}.m"),
            _integer(_get(node, "b", path), f"{path}.b"),
            sigma,
            _number(_get(node, "mu", path), f"{path}.mu"),
        )
        case = _integer(node.get("case", 1), f"{path}.case")
        if case not in (1, 2):
            _fail(f"{path}.case", f"expected 1 or 2, got {case}")
        inst = scenario.case1 if case == 1 else scenario.case2
        extras = {
            "m": _integer(node["m"], ""),
            "b": _integer(node["b"], ""),
            "sigma_budget_sq": sigma**2,
        }
        return inst, list(scenario.workers), extras
    except ConfigError:
        raise
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_worker_override(node, path: str):
    node = _mapping(node, path)
    index = _integer(_get(node, "index", path), f"{path}.index")
    kind = _choice(
        _get(node, "kind", path),
        {"honest", "byzantine", "fully_poisoned", "partially_poisoned"},
        f"{path}.kind",
    )
    if kind == "honest":
        _check_keys(node, {"index", "kind", "source"}, path)
        source = node.get("source")
        return index, ("honest", _parse_source(source, f"{path}.source")
                       if source is not None else None)
    if kind == "byzantine":
        _check_keys(node, {"index", "kind", "attack"}, path)
        return index, ("byzantine", _parse_attack(_get(node, "attack", path),
                                                  f"{path}.attack"))
    if kind == "fully_poisoned":
        _check_keys(node, {"index", "kind", "substitute"}, path)
        return index, ("fully_poisoned",
                       _parse_source(_get(node, "substitute", path), f"{path}.substitute"))
    _check_keys(node, {"index", "kind", "points", "corrupted", "values", "trim"}, path)
    try:
        worker = partially_poisoned_worker(
            _get(node, "points", path),
            node.get("corrupted", ()),
            node.get("values"),
            _integer(node.get("trim", 0), f"{path}.trim"),
        )
    except ValueError as exc:
        _fail(path, str(exc))
    return index, ("partially_poisoned", worker)


# ---------------------------------------------------------------------------
# Experiment building
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExperimentPoint:
    """One fully resolved sweep point: run configs per seed plus the
    constants feeding the bound/floor overlay."""

    name: str
    fingerprint: str
    algorithm: str
    T: int
    seeds: tuple
    run_configs: dict
    constants: dict
    bound: float
    floor: float
    sweep_param: str | None
    sweep_value: object
    record_diagnostics: bool


def load_config(path) -> dict:
    raw = yaml.safe_load(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a mapping")
    return raw


def _apply_sweep(raw: dict, param: str, value) -> dict:
    out = copy.deepcopy(raw)
    node = out
    parts = param.split(".")
    for i, part in enumerate(parts[:-1]):
        key = int(part) if isinstance(node, list) else part
        try:
            node = node[key]
        except (KeyError, IndexError, TypeError):
            _fail("sweep.param", f"path {param!r} does not exist at {part!r}")
    last = parts[-1]
    key = int(last) if isinstance(node, list) else last
    try:
        node[key]
    except (KeyError, IndexError, TypeError):
        _fail("sweep.param", f"path {param!r} does not exist at {last!r}")
    node[key] = value
    return out


def _normalize(obj):
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _fingerprint(obj) -> str:
    blob = json.dumps(_normalize(obj), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _build_point(raw: dict, name: str, seed_override, sweep_param, sweep_value) -> ExperimentPoint:
    _check_keys(raw, _TOP_KEYS, "config")
    algorithm = _choice(_get(raw, "algorithm", "config"), set(_RUNNERS),
                        "config.algorithm")
    T = _integer(_get(raw, "T", "config"), "config.T")
    if T < 2:
        _fail("config.T", f"need T >= 2, got {T}")

    if seed_override is not None:
        seeds = [int(seed_override)]
    else:
        seeds = _get(raw, "seeds", "config")
        if not isinstance(seeds, list) or not seeds:
            _fail("config.seeds", "expected a non-empty list of integers")
        seeds = [_integer(s, f"config.seeds[{i}]") for i, s in enumerate(seeds)]

    instance, default_workers, extras = _parse_instance(
        _get(raw, "instance", "config"), "config.instance")
    n, dim = instance.n, instance.dim
    declared_f = instance.f

    theta0_raw = raw.get("theta0", 0.0)
    if isinstance(theta0_raw, (int, float)) and not isinstance(theta0_raw, bool):
        theta0 = np.full(dim, float(theta0_raw))
    else:
        theta0 = np.atleast_1d(np.asarray(theta0_raw, dtype=float))
        if theta0.shape != (dim,):
            _fail("config.theta0", f"expected {dim} entries, got shape {theta0.shape}")

    # workers: defaults by algorithm, then index-wise overrides
    if default_workers is None:
        if algorithm in ("dsgd", "baseline"):
            default_workers = [HonestWorker(s) for s in instance.sources]
        else:
            sources = instance.sources
            if all(hasattr(s, "points") for s in sources):
                default_workers = [
                    PartiallyPoisonedWorker(s.points.copy(), (), 0) for s in sources
                ]
            else:
                _fail("config.workers",
                      "the full-gradient loop needs explicit datasets per worker")
    workers = list(default_workers)
    raw_overrides = raw.get("workers", [])
    if raw_overrides is None:
        raw_overrides = []
    if not isinstance(raw_overrides, list):
        _fail("config.workers", "expected a list of worker overrides")
    for i, entry in enumerate(raw_overrides):
        wpath = f"config.workers[{i}]"
        index, (kind, payload) = _parse_worker_override(entry, wpath)
        if not 0 <= index < n:
            _fail(f"{wpath}.index", f"worker index {index} out of range [0, {n})")
        if kind == "honest":
            workers[index] = HonestWorker(payload if payload is not None
                                          else instance.sources[index])
        elif kind == "byzantine":
            workers[index] = ByzantineWorker(payload)
        elif kind == "fully_poisoned":
            workers[index] = PoisonedWorker(payload)
        else:
            workers[index] = payload

    for i, w in enumerate(workers):
        if algorithm in ("dsgd", "baseline"):
            if not isinstance(w, (HonestWorker, PoisonedWorker, ByzantineWorker)):
                _fail(f"config.workers[{i}]",
                      f"{type(w).__name__} is not valid for algorithm {algorithm!r}")
        elif not isinstance(w, (PartiallyPoisonedWorker, ByzantineWorker)):
            _fail(f"config.workers[{i}]",
                  f"{type(w).__name__} is not valid for algorithm 'dgd'")
        if isinstance(w, HonestWorker) and w.source.dim != dim:
            _fail(f"config.workers[{i}]", "source dimension mismatch")

    # aggregator: trimmed mean at the declared corruption level by default
    agg_node = raw.get("aggregator")
    if agg_node is None:
        agg = (AggregatorSpec("average") if algorithm == "baseline"
               else AggregatorSpec("trimmed_mean", declared_f))
    else:
        agg_node = _mapping(agg_node, "config.aggregator")
        _check_keys(agg_node, {"kind", "trim"}, "config.aggregator")
        kind = _choice(_get(agg_node, "kind", "config.aggregator"),
                       {"average", "trimmed_mean"}, "config.aggregator.kind")
        try:
            agg = AggregatorSpec(kind, _integer(agg_node.get("trim", 0),
                                                "config.aggregator.trim"))
        except ValueError as exc:
            _fail("config.aggregator", str(exc))
    if agg.kind == "trimmed_mean" and n <= 2 * agg.trim:
        _fail("config.aggregator.trim", f"need n > 2*trim, got n={n}, trim={agg.trim}")
    if algorithm == "baseline" and agg.kind != "average":
        _fail("config.aggregator.kind", "the baseline runs with plain averaging")
    if algorithm != "baseline" and agg.kind != "trimmed_mean":
        _fail("config.aggregator.kind", f"algorithm {algorithm!r} uses trimmed_mean")

    constants_emp = verify_assumptions(instance)
    L, mu = constants_emp.L, constants_emp.mu

    schedule = None
    gamma = None
    schedule_kind = None
    if algorithm in ("dsgd", "baseline"):
        schedule_kind = _choice(raw.get("schedule", "auto"),
                                {"auto", "constant", "two_phase"}, "config.schedule")
        from .schedules import auto_schedule, constant_schedule, two_phase_schedule
        if schedule_kind == "auto":
            schedule = auto_schedule(T, L, mu)
        elif schedule_kind == "constant":
            schedule = constant_schedule(T, L)
        else:
            schedule = two_phase_schedule(T, L, mu)
    else:
        gamma = _number(raw.get("gamma", 1.0 / L), "config.gamma")
        if gamma <= 0:
            _fail("config.gamma", f"step size must be positive, got {gamma}")

    record = raw.get("record_diagnostics", True)
    if not isinstance(record, bool):
        _fail("config.record_diagnostics", f"expected a boolean, got {record!r}")

    run_configs = {
        seed: make_run_config(instance, workers, agg, T, theta0, seed=seed,
                              schedule=schedule, gamma=gamma,
                              record_diagnostics=record)
        for seed in seeds
    }

    # bound/floor constants: the robustness coefficient follows the trim in
    # use; the floors use the declared ground-truth corruption
    lam_f = agg.trim if agg.kind == "trimmed_mean" else declared_f
    lam = trim_robustness_coeff(n, lam_f)
    q0 = honest_global_loss(instance, theta0) - instance.q_star()
    constants = {
        "n": n,
        "f": declared_f,
        "trim": agg.trim,
        "mu": mu,
        "L": L,
        "kappa": L / mu,
        "lam": lam,
        "sigma_sq": constants_emp.sigma_sq,
        "zeta_sq": constants_emp.zeta_sq,
        "q0": q0,
    }
    # floors describe what the construction makes unavoidable: use scenario
    # budgets when the instance came from a generator, else the exact
    # instance constants
    zeta_floor_sq = extras.get("zeta_budget_sq", constants_emp.zeta_sq)
    sigma_floor_sq = extras.get("sigma_budget_sq", constants_emp.sigma_sq)
    floor = heterogeneity_floor(n, declared_f, zeta_floor_sq, mu)
    if algorithm == "dgd":
        lam_local = 0.0
        counts = (extras["m"], extras["b"]) if "m" in extras else None
        for w in workers:
            if isinstance(w, PartiallyPoisonedWorker) and w.trim > 0:
                m_w = w.dataset.shape[0]
                lam_local = max(lam_local, point_trim_robustness_coeff(m_w, w.trim))
                counts = counts or (m_w, w.trim)
        constants["lam_local"] = lam_local
        if counts is not None:
            constants["m"], constants["b"] = counts
            floor = max(floor, poisoning_floor(counts[0], counts[1],
                                               sigma_floor_sq, mu))
        bound = trimmed_dgd_bound(T, q0, mu, L, lam, lam_local,
                                  constants_emp.sigma_sq, constants_emp.zeta_sq)
    else:
        bound = momentum_dsgd_bound(T, q0, L / mu, lam, constants_emp.sigma_sq,
                                    constants_emp.zeta_sq, mu, n, declared_f)

    resolved = {
        "name": name,
        "algorithm": algorithm,
        "T": T,
        "seeds": seeds,
        "theta0": theta0,
        "schedule": schedule_kind,
        "gamma": gamma,
        "aggregator": {"kind": agg.kind, "trim": agg.trim},
        "instance": raw["instance"],
        "workers": raw.get("workers", []),
        "record_diagnostics": record,
        "sweep": {"param": sweep_param, "value": sweep_value},
    }
    return ExperimentPoint(
        name=name,
        fingerprint=_fingerprint(resolved),
        algorithm=algorithm,
        T=T,
        seeds=tuple(seeds),
        run_configs=run_configs,
        constants=constants,
        bound=bound,
        floor=floor,
        sweep_param=sweep_param,
        sweep_value=sweep_value,
        record_diagnostics=record,
    )


def build_experiment(raw: dict, name: str = "experiment", seed_override=None,
                     use_sweep: bool = True) -> list:
    """Resolve a raw config mapping into one ExperimentPoint per sweep value
    (a single point when no sweep is requested). All points are validated
    before any run starts."""
    _check_keys(_mapping(raw, "config"), _TOP_KEYS, "config")
    name = raw.get("name", name)
    sweep = raw.get("sweep")
    if sweep is None or not use_sweep:
        return [_build_point(raw, name, seed_override, None, None)]
    sweep = _mapping(sweep, "config.sweep")
    _check_keys(sweep, {"param", "values"}, "config.sweep")
    param = _get(sweep, "param", "config.sweep")
    if not isinstance(param, str) or not param:
        _fail("config.sweep.param", "expected a non-empty dotted key path")
    values = _get(sweep, "values", "config.sweep")
    if not isinstance(values, list) or not values:
        _fail("config.sweep.values", "expected a non-empty list")
    points = []
    for value in values:
        varied = _apply_sweep(raw, param, value)
        varied.pop("sweep", None)
        points.append(_build_point(varied, name, seed_override, param, value))
    return points


# ---------------------------------------------------------------------------
# Trace and summary files
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def trace_path(out_dir, point: ExperimentPoint, seed: int) -> Path:
    return Path(out_dir) / "traces" / f"trace_{point.fingerprint[:12]}_seed{seed}.csv"


def write_trace(path, trace):
    lines = [f"# schema={TRACE_SCHEMA}", ",".join(TRACE_FIELDS)]
    for r in trace:
        lines.append(",".join((
            str(r.t), _fmt(r.gamma), _fmt(r.beta), _fmt(r.loss_gap),
            _fmt(r.grad_norm_sq), _fmt(r.deviation_sq), _fmt(r.mean_drift_sq),
            _fmt(r.lyapunov),
        )))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace(path) -> dict:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != f"# schema={TRACE_SCHEMA}":
        raise ValueError(f"{path}: not a {TRACE_SCHEMA} file")
    header = lines[1].split(",")
    if tuple(header) != TRACE_FIELDS:
        raise ValueError(f"{path}: unexpected columns {header}")
    rows = [line.split(",") for line in lines[2:] if line]
    cols = {name: np.array([float(r[i]) for r in rows])
            for i, name in enumerate(header)}
    cols["t"] = cols["t"].astype(int)
    return cols


def execute_experiment(points, out_dir, threads: int = 1) -> list:
    """Run every (point, seed) pair, write one trace file per recorded run
    and one summary line per point; returns the summary records."""
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    jobs = [(pi, seed) for pi, point in enumerate(points) for seed in point.seeds]

    def work(job):
        pi, seed = job
        point = points[pi]
        start = time.perf_counter()
        try:
            result = _RUNNERS[point.algorithm](point.run_configs[seed])
            return pi, seed, result, None, time.perf_counter() - start
        except DivergenceError as exc:
            return pi, seed, None, exc, time.perf_counter() - start

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, jobs))
    else:
        outcomes = [work(job) for job in jobs]

    by_point = {pi: {} for pi in range(len(points))}
    for pi, seed, result, failure, elapsed in outcomes:
        by_point[pi][seed] = (result, failure, elapsed)

    summaries = []
    for pi, point in enumerate(points):
        gaps, diverged, traces = {}, {}, {}
        wall = 0.0
        for seed in point.seeds:
            result, failure, elapsed = by_point[pi][seed]
            wall += elapsed
            if failure is not None:
                diverged[str(seed)] = failure.iteration
                continue
            gaps[str(seed)] = result.final_gap
            if point.record_diagnostics:
                path = trace_path(out, point, seed)
                write_trace(path, result.trace)
                traces[str(seed)] = str(path.relative_to(out))
        values = list(gaps.values())
        summaries.append({
            "schema": SUMMARY_SCHEMA,
            "name": point.name,
            "fingerprint": point.fingerprint,
            "sweep_param": point.sweep_param,
            "sweep_value": point.sweep_value,
            "algorithm": point.algorithm,
            "T": point.T,
            "seeds": list(point.seeds),
            "final_gaps": gaps,
            "mean_final_gap": float(np.mean(values)) if values else None,
            "std_final_gap": (float(np.std(values, ddof=1)) if len(values) > 1
                              else (0.0 if values else None)),
            "diverged": diverged,
            "constants": point.constants,
            "bound": point.bound,
            "floor": point.floor,
            "traces": traces,
            "wall_seconds": wall,
        })

    with (out / "summary.jsonl").open("w", encoding="utf-8") as fh:
        for record in summaries:
            fh.write(json.dumps(record, sort_keys=True, allow_nan=False) + "\n")
    return summaries


def run_experiment(config_path, out_dir=None, threads: int = 1,
                   seed_override=None, use_sweep: bool = True) -> list:
    raw = load_config(config_path)
    name = raw.get("name", Path(config_path).stem)
    points = build_experiment(raw, name=name, seed_override=seed_override,
                              use_sweep=use_sweep)
    if out_dir is None:
        out_node = raw.get("output") or {}
        if not isinstance(out_node, dict):
            _fail("config.output", "expected a mapping")
        out_dir = out_node.get("dir", "out")
    return execute_experiment(points, out_dir, threads=threads)
