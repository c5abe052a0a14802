"""Experiment plumbing: JSON configs, simulation batches, tables on disk.

An experiment config is one JSON document bundling the machine shape, a
workload source, a policy list, and run lengths.  The helpers here load and
validate that document (errors name the offending field), run each policy on
identical workloads and seeds, and emit schema-stable tables:

* per-quantum CSV, one row per (quantum, thread);
* a JSON run summary per batch;
* a policy comparison CSV with speedups against the first-listed policy;
* a sweep CSV over a cartesian product of config values.

Data files never embed timestamps, so identical inputs give identical bytes.
Floats are written in shortest round-trip form (``str``).  Summary metrics
can exclude the first ``warmup_quanta`` quanta so steady-state comparisons
ignore the fixed row-major start; the per-quantum CSV always keeps every
quantum.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import os.path
from dataclasses import dataclass
from typing import Sequence

from .core import ConfigError, SystemConfig, processor_load
from .engine import SimulationReport, run_simulation
from .policies import (
    MAX_EXHAUSTIVE_THREADS,
    Policy,
    optimal_partition,
    serpentine_schedule,
)
from .workload import (
    IDLE_PHASE_DURATION,
    Phase,
    ThreadWorkload,
    WorkloadSpec,
    generate_synthetic,
    load_trace,
    pad_workloads,
)

__all__ = [
    "COMPARE_FIELDS",
    "ExperimentConfig",
    "OracleCheck",
    "PolicyMetrics",
    "QUANTA_FIELDS",
    "SWEEPABLE_FIELDS",
    "load_experiment",
    "measure",
    "run_oracle_check",
    "run_policies",
    "run_sweep",
    "write_compare_csv",
    "write_quanta_csv",
    "write_summary",
    "write_sweep_csv",
]

QUANTA_FIELDS = ("quantum", "thread", "processor", "slot", "sampled_mlp", "completed", "stalls")
COMPARE_FIELDS = (
    "policy",
    "throughput",
    "total_stalls",
    "mean_gap",
    "mean_oversubscription",
    "speedup",
)
_SYSTEM_FIELDS = tuple(f.name for f in dataclasses.fields(SystemConfig))
SWEEPABLE_FIELDS = _SYSTEM_FIELDS + ("seed", "quanta")

_MAX_SEED = 1 << 64


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: machine, workloads (unpadded), policies, run lengths.

    Workloads are materialized at load time but padded to K*L threads only
    at run time, so a sweep may change the machine shape.
    """

    system: SystemConfig
    workloads: tuple[ThreadWorkload, ...]
    policies: tuple[Policy, ...]
    quanta: int = 1
    warmup_quanta: int = 0
    seed: int = 0
    sweep: tuple[tuple[str, tuple[int, ...]], ...] = ()

    def __post_init__(self) -> None:
        if not self.policies:
            raise ConfigError("config field 'policies': must list at least one policy")
        if self.quanta < 1:
            raise ConfigError(f"config field 'quanta': must be >= 1, got {self.quanta}")
        if not 0 <= self.warmup_quanta < self.quanta:
            raise ConfigError(
                f"config field 'warmup_quanta': must be in [0, quanta), "
                f"got {self.warmup_quanta} with quanta {self.quanta}"
            )
        if not 0 <= self.seed < _MAX_SEED:
            raise ConfigError(f"config field 'seed': must be in [0, 2^64), got {self.seed}")


def _fail(field: str, problem: str) -> ConfigError:
    return ConfigError(f"config field '{field}': {problem}")


def _as_mapping(value, field: str) -> dict:
    if not isinstance(value, dict):
        raise _fail(field, "expected an object")
    return value


def _as_int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(field, f"expected an integer, got {value!r}")
    return value


def _as_bool(value, field: str) -> bool:
    if not isinstance(value, bool):
        raise _fail(field, f"expected true or false, got {value!r}")
    return value


def _as_range(value, field: str) -> tuple[int, int]:
    if not isinstance(value, list) or len(value) != 2:
        raise _fail(field, f"expected [min, max], got {value!r}")
    return (_as_int(value[0], field), _as_int(value[1], field))


def _reject_unknown(section: dict, known: Sequence[str], field: str) -> None:
    for key in section:
        if key not in known:
            raise _fail(f"{field}.{key}" if field else key, "unknown field")


def _parse_system(section) -> SystemConfig:
    section = _as_mapping(section, "system")
    _reject_unknown(section, _SYSTEM_FIELDS, "system")
    fields = {k: _as_int(v, f"system.{k}") for k, v in section.items()}
    return SystemConfig(**fields)


def _parse_phases(raw, field: str) -> tuple[Phase, ...]:
    if not isinstance(raw, list) or not raw:
        raise _fail(field, "expected a non-empty list of [duration, demand] pairs")
    phases = []
    for i, pair in enumerate(raw):
        duration, demand = _as_range(pair, f"{field}[{i}]")
        try:
            phases.append(Phase(duration=duration, demand=demand))
        except ValueError as exc:
            raise _fail(f"{field}[{i}]", str(exc)) from exc
    return tuple(phases)


def _parse_workloads(section, system: SystemConfig, config_dir: str) -> tuple[ThreadWorkload, ...]:
    """Materialize the workload source; exactly one source form is allowed.

    Forms: ``trace`` (path, relative to the config file), ``synthetic``
    (WorkloadSpec fields + n_threads + seed), ``threads`` (explicit phase
    lists), or ``demands`` (shorthand: one constant-demand repeating phase
    per thread).
    """
    section = _as_mapping(section, "workload")
    forms = [k for k in ("trace", "synthetic", "threads", "demands") if k in section]
    if len(forms) != 1:
        raise _fail("workload", "provide exactly one of trace, synthetic, threads, demands")
    _reject_unknown(section, forms, "workload")
    form = forms[0]
    raw = section[form]

    if form == "trace":
        if not isinstance(raw, str):
            raise _fail("workload.trace", f"expected a path string, got {raw!r}")
        path = raw if os.path.isabs(raw) else os.path.join(config_dir, raw)
        return load_trace(path, system)

    if form == "synthetic":
        raw = _as_mapping(raw, "workload.synthetic")
        known = ("n_threads", "seed", "phases_per_thread", "duration_range", "demand_range", "repeat")
        _reject_unknown(raw, known, "workload.synthetic")
        if "n_threads" not in raw:
            raise _fail("workload.synthetic.n_threads", "required")
        n_threads = _as_int(raw["n_threads"], "workload.synthetic.n_threads")
        seed = _as_int(raw.get("seed", 0), "workload.synthetic.seed")
        spec_kwargs = {}
        if "phases_per_thread" in raw:
            spec_kwargs["phases_per_thread"] = _as_int(
                raw["phases_per_thread"], "workload.synthetic.phases_per_thread"
            )
        if "duration_range" in raw:
            spec_kwargs["duration_range"] = _as_range(
                raw["duration_range"], "workload.synthetic.duration_range"
            )
        if "demand_range" in raw:
            spec_kwargs["demand_range"] = _as_range(
                raw["demand_range"], "workload.synthetic.demand_range"
            )
        if "repeat" in raw:
            spec_kwargs["repeat"] = _as_bool(raw["repeat"], "workload.synthetic.repeat")
        try:
            spec = WorkloadSpec(**spec_kwargs)
            return generate_synthetic(spec, n_threads, seed)
        except ValueError as exc:
            raise _fail("workload.synthetic", str(exc)) from exc

    if form == "threads":
        if not isinstance(raw, list):
            raise _fail("workload.threads", "expected a list of thread objects")
        out = []
        for i, entry in enumerate(raw):
            entry = _as_mapping(entry, f"workload.threads[{i}]")
            _reject_unknown(entry, ("phases", "repeat"), f"workload.threads[{i}]")
            if "phases" not in entry:
                raise _fail(f"workload.threads[{i}].phases", "required")
            phases = _parse_phases(entry["phases"], f"workload.threads[{i}].phases")
            repeat = _as_bool(entry.get("repeat", True), f"workload.threads[{i}].repeat")
            out.append(ThreadWorkload(thread=i, phases=phases, repeat=repeat))
        return tuple(out)

    # demands: one repeating constant-demand phase per listed thread
    if not isinstance(raw, list):
        raise _fail("workload.demands", "expected a list of integers")
    out = []
    for i, d in enumerate(raw):
        demand = _as_int(d, f"workload.demands[{i}]")
        try:
            phase = Phase(duration=IDLE_PHASE_DURATION, demand=demand)
        except ValueError as exc:
            raise _fail(f"workload.demands[{i}]", str(exc)) from exc
        out.append(ThreadWorkload(thread=i, phases=(phase,), repeat=True))
    return tuple(out)


def _parse_policies(raw) -> tuple[Policy, ...]:
    if not isinstance(raw, list) or not raw:
        raise _fail("policies", "expected a non-empty list of policy names")
    out = []
    for name in raw:
        try:
            out.append(Policy(name))
        except ValueError:
            known = ", ".join(p.value for p in Policy)
            raise _fail("policies", f"unknown policy {name!r} (known: {known})") from None
    return tuple(out)


def _parse_sweep(raw) -> tuple[tuple[str, tuple[int, ...]], ...]:
    raw = _as_mapping(raw, "sweep")
    out = []
    for key, values in raw.items():
        if key not in SWEEPABLE_FIELDS:
            raise _fail(f"sweep.{key}", f"not sweepable (choose from {', '.join(SWEEPABLE_FIELDS)})")
        if not isinstance(values, list) or not values:
            raise _fail(f"sweep.{key}", "expected a non-empty list of integers")
        out.append((key, tuple(_as_int(v, f"sweep.{key}") for v in values)))
    return tuple(out)


def load_experiment(path: str) -> ExperimentConfig:
    """Parse and validate one experiment config document."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path}: not valid JSON ({exc})") from exc
    doc = _as_mapping(doc, "<document>")
    known = ("system", "workload", "policies", "quanta", "warmup_quanta", "seed", "sweep")
    _reject_unknown(doc, known, "")
    for required in ("workload", "policies"):
        if required not in doc:
            raise _fail(required, "required")

    system = _parse_system(doc.get("system", {}))
    workloads = _parse_workloads(doc["workload"], system, os.path.dirname(os.path.abspath(path)))
    return ExperimentConfig(
        system=system,
        workloads=workloads,
        policies=_parse_policies(doc["policies"]),
        quanta=_as_int(doc.get("quanta", 1), "quanta"),
        warmup_quanta=_as_int(doc.get("warmup_quanta", 0), "warmup_quanta"),
        seed=_as_int(doc.get("seed", 0), "seed"),
        sweep=_parse_sweep(doc["sweep"]) if "sweep" in doc else (),
    )


@dataclass(frozen=True)
class PolicyMetrics:
    """Steady-state metrics for one run, taken over the post-warmup quanta.

    ``mean_gap`` and ``mean_oversubscription`` average the quality of each
    quantum's chosen schedule against that quantum's sampled counters
    (oversubscription additionally averages across processors).
    """

    policy: Policy
    throughput: float
    total_stalls: int
    mean_gap: float
    mean_oversubscription: float


def measure(report: SimulationReport, warmup_quanta: int = 0) -> PolicyMetrics:
    records = report.per_quantum[warmup_quanta:]
    if not records:
        raise ValueError(
            f"warmup_quanta {warmup_quanta} leaves no quanta to measure "
            f"(run had {len(report.per_quantum)})"
        )
    cycles = len(records) * report.config.quantum_cycles
    k = report.config.num_processors
    completed = sum(sum(r.completed) for r in records)
    stalls = sum(sum(r.stalls) for r in records)
    gap_sum = sum(r.quality.gap for r in records)
    over_sum = sum(sum(r.quality.per_processor_oversubscription) for r in records)
    return PolicyMetrics(
        policy=report.policy,
        throughput=completed / cycles,
        total_stalls=stalls,
        mean_gap=gap_sum / len(records),
        mean_oversubscription=over_sum / (len(records) * k),
    )


def run_policies(config: ExperimentConfig, seed: int | None = None) -> list[SimulationReport]:
    """Run every listed policy on identical padded workloads and seed."""
    effective_seed = config.seed if seed is None else seed
    padded = pad_workloads(config.workloads, config.system)
    return [
        run_simulation(config.system, padded, policy, effective_seed, config.quanta)
        for policy in config.policies
    ]


def write_quanta_csv(report: SimulationReport, path: str) -> None:
    """One row per (quantum, thread): placement, sampled counter, work done."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(QUANTA_FIELDS)
        for rec in report.per_quantum:
            for t, (p, s) in enumerate(rec.schedule.placement):
                writer.writerow(
                    [rec.index, t, p, s, rec.sampled_mlp[t], rec.completed[t], rec.stalls[t]]
                )


def write_compare_csv(metrics: Sequence[PolicyMetrics], path: str) -> None:
    """Comparison table; speedup is against the first-listed policy."""
    base = metrics[0].throughput
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARE_FIELDS)
        for m in metrics:
            if m.throughput == base:
                speedup = 1.0
            elif base == 0.0:
                speedup = float("inf")
            else:
                speedup = m.throughput / base
            writer.writerow(
                [
                    m.policy.value,
                    m.throughput,
                    m.total_stalls,
                    m.mean_gap,
                    m.mean_oversubscription,
                    speedup,
                ]
            )


def write_summary(
    config: ExperimentConfig,
    reports: Sequence[SimulationReport],
    seed: int,
    path: str,
) -> None:
    """JSON run summary: config echo plus whole-run and post-warmup metrics."""
    policies = {}
    for report in reports:
        m = measure(report, config.warmup_quanta)
        totals = dataclasses.asdict(report.totals)
        policies[report.policy.value] = {
            "totals": totals,
            "measured": {
                "first_quantum": config.warmup_quanta,
                "quanta": config.quanta - config.warmup_quanta,
                "throughput": m.throughput,
                "total_stalls": m.total_stalls,
                "mean_gap": m.mean_gap,
                "mean_oversubscription": m.mean_oversubscription,
            },
        }
    doc = {
        "system": dataclasses.asdict(config.system),
        "policies": [p.value for p in config.policies],
        "quanta": config.quanta,
        "warmup_quanta": config.warmup_quanta,
        "seed": seed,
        "threads": config.system.num_threads,
        "results": policies,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sweep_points(config: ExperimentConfig):
    keys = [k for k, _ in config.sweep]
    for combo in itertools.product(*(values for _, values in config.sweep)):
        yield dict(zip(keys, combo))


def run_sweep(
    config: ExperimentConfig, seed: int | None = None
) -> tuple[tuple[str, ...], list[tuple]]:
    """Cartesian product over the swept values; rows in (point, policy) order.

    Returns (header, rows).  Each point rebuilds the machine config, so
    swept shapes revalidate and repad; a point that violates an invariant
    aborts the sweep with the offending values named.
    """
    if not config.sweep:
        raise ConfigError("config field 'sweep': required for a sweep run")
    base_seed = config.seed if seed is None else seed
    keys = tuple(k for k, _ in config.sweep)
    header = keys + ("policy",) + COMPARE_FIELDS[1:-1]
    rows: list[tuple] = []
    for point in _sweep_points(config):
        label = ", ".join(f"{k}={v}" for k, v in point.items())
        system_fields = {k: v for k, v in point.items() if k in _SYSTEM_FIELDS}
        quanta = point.get("quanta", config.quanta)
        point_seed = point.get("seed", base_seed)
        try:
            system = dataclasses.replace(config.system, **system_fields)
            if config.warmup_quanta >= quanta:
                raise ConfigError(
                    f"quanta {quanta} must exceed warmup_quanta {config.warmup_quanta}"
                )
            padded = pad_workloads(config.workloads, system)
        except ConfigError as exc:
            raise ConfigError(f"sweep point ({label}): {exc}") from exc
        for policy in config.policies:
            report = run_simulation(system, padded, policy, point_seed, quanta)
            m = measure(report, config.warmup_quanta)
            rows.append(
                tuple(point[k] for k in keys)
                + (policy.value, m.throughput, m.total_stalls, m.mean_gap, m.mean_oversubscription)
            )
    return header, rows


def write_sweep_csv(header: Sequence[str], rows: Sequence[tuple], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


@dataclass(frozen=True)
class OracleCheck:
    """Per-quantum serpentine vs exhaustive-optimal max-sum comparison."""

    rows: tuple[tuple[int, float, float, float], ...]  # (quantum, serpentine, optimal, ratio)
    corpus_max_ratio: float


def run_oracle_check(config: ExperimentConfig, seed: int | None = None) -> OracleCheck:
    """Drive a serpentine run and score each sampled vector against the oracle.

    Ratio convention: a 0/0 quantum (all counters zero) counts as 1.0, since
    both schedulers are trivially optimal.  Requires N <= 12 threads so the
    exhaustive oracle stays tractable.
    """
    n = config.system.num_threads
    if n > MAX_EXHAUSTIVE_THREADS:
        raise ConfigError(
            f"oracle check needs K*L <= {MAX_EXHAUSTIVE_THREADS} threads, config has {n}"
        )
    effective_seed = config.seed if seed is None else seed
    padded = pad_workloads(config.workloads, config.system)
    report = run_simulation(
        config.system, padded, Policy.SERPENTINE, effective_seed, config.quanta
    )
    system = config.system
    rows = []
    worst = 1.0
    for rec in report.per_quantum:
        mlp = rec.sampled_mlp
        serp = processor_load(serpentine_schedule(mlp, system), mlp, system).max_sum
        opt = processor_load(optimal_partition(mlp, system), mlp, system).max_sum
        ratio = 1.0 if opt == 0.0 else serp / opt
        worst = max(worst, ratio)
        rows.append((rec.index, serp, opt, ratio))
    return OracleCheck(rows=tuple(rows), corpus_max_ratio=worst)
