"""Deterministic cycle-level engine for MSHR contention and quantum scheduling.

Threads generate memory requests against their processor's finite MSHR pool.
A request occupies one MSHR for exactly ``memory_latency`` cycles; a full
pool stalls any thread that still wants to issue.  At every quantum boundary
the per-thread occupancy counters (averaged over the final ``window_cycles``
of the quantum) are sampled and handed to a scheduling policy, which picks
the next quantum's placement.

Each cycle applies, in this fixed order:

1. retire every in-flight request whose completion cycle is now;
2. issue new requests: each processor's slots are visited in rotating
   round-robin order (start slot = cycle mod L) granting one MSHR per visit,
   looping until every resident thread reached its demand or the pool is
   exhausted; a thread left wanting with an exhausted pool accrues one stall
   cycle;
3. add each thread's end-of-cycle outstanding count to its occupancy
   accumulators;
4. advance phase clocks and the cycle counter.

Everything is integer arithmetic over plain lists, so a run is bitwise
deterministic in (config, workloads, policy, seed, total_quanta).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .core import (
    ConfigError,
    MlpVector,
    Schedule,
    ScheduleQuality,
    SystemConfig,
    processor_load,
)
from .policies import Policy, next_schedule, quantum_seed
from .workload import ThreadWorkload

__all__ = [
    "QuantumRecord",
    "SimState",
    "SimulationReport",
    "SimulationTotals",
    "initial_schedule",
    "run_simulation",
    "sample_mlp",
    "step_cycle",
    "throughput",
]

# Sentinel remaining-duration for threads that ran out of phases (repeat off).
_IDLE_FOREVER = 1 << 62


def initial_schedule(config: SystemConfig) -> Schedule:
    """Row-major start: thread i on processor i mod K, slot i div K."""
    k = config.num_processors
    return Schedule(tuple((i % k, i // k) for i in range(config.num_threads)))


@dataclass
class SimState:
    """Mutable engine state; one instance per run, never shared.

    ``pools[p]`` holds (completion_cycle, thread) records in issue order;
    with a fixed memory latency issue order is completion order, so each
    pool is a FIFO.  A migrated thread's in-flight requests stay in the old
    processor's pool (they hold those MSHRs until retirement) while new
    requests allocate on the new processor.
    """

    cycle: int
    schedule: Schedule
    pools: list[deque]                 # per processor: (completion_cycle, thread)
    slot_owner: list[list[int]]        # [processor][slot] -> thread id
    slot_orders: list[tuple[int, ...]] # [start] -> slot visit order
    outstanding: list[int]             # per thread, across both pools during migration
    demand: list[int]                  # per thread, current phase target
    phases: list[tuple]                # per thread, the phase tuple
    repeat: list[bool]
    phase_idx: list[int]
    phase_left: list[int]              # cycles left in the current phase
    frozen_until: list[int]            # migrated threads may not issue before this cycle
    occupancy_accum: list[int]         # windowed; reset at window start and on sampling
    occupancy_total: list[int]         # whole-run per-thread occupancy integral
    proc_occupancy_total: list[int]    # whole-run per-processor pool occupancy integral
    completed_quantum: list[int]
    stalls_quantum: list[int]

    @classmethod
    def initial(
        cls,
        config: SystemConfig,
        schedule: Schedule,
        workloads: Sequence[ThreadWorkload],
    ) -> "SimState":
        n = config.num_threads
        k = config.num_processors
        l = config.slots_per_processor
        state = cls(
            cycle=0,
            schedule=schedule,
            pools=[deque() for _ in range(k)],
            slot_owner=[[-1] * l for _ in range(k)],
            slot_orders=[tuple((start + i) % l for i in range(l)) for start in range(l)],
            outstanding=[0] * n,
            demand=[w.phases[0].demand for w in workloads],
            phases=[w.phases for w in workloads],
            repeat=[w.repeat for w in workloads],
            phase_idx=[0] * n,
            phase_left=[w.phases[0].duration for w in workloads],
            frozen_until=[0] * n,
            occupancy_accum=[0] * n,
            occupancy_total=[0] * n,
            proc_occupancy_total=[0] * k,
            completed_quantum=[0] * n,
            stalls_quantum=[0] * n,
        )
        state._index_schedule(schedule)
        return state

    def _index_schedule(self, schedule: Schedule) -> None:
        for t, (p, s) in enumerate(schedule.placement):
            self.slot_owner[p][s] = t
        self.schedule = schedule


def _advance_phase(state: SimState, t: int) -> None:
    idx = state.phase_idx[t] + 1
    phases = state.phases[t]
    if idx == len(phases):
        if not state.repeat[t]:
            state.demand[t] = 0
            state.phase_left[t] = _IDLE_FOREVER
            return
        idx = 0
    state.phase_idx[t] = idx
    state.demand[t] = phases[idx].demand
    state.phase_left[t] = phases[idx].duration


def step_cycle(state: SimState, config: SystemConfig) -> SimState:
    """Advance the engine by one cycle (retire, issue, accumulate, tick).

    Mutates ``state`` in place and returns it.
    """
    cycle = state.cycle
    outstanding = state.outstanding
    demand = state.demand
    frozen = state.frozen_until
    completed = state.completed_quantum

    for pool in state.pools:
        while pool and pool[0][0] == cycle:
            t = pool.popleft()[1]
            outstanding[t] -= 1
            completed[t] += 1

    mshrs = config.mshrs_per_processor
    slot_order = state.slot_orders[cycle % config.slots_per_processor]
    stalls = state.stalls_quantum
    for p, pool in enumerate(state.pools):
        owners = state.slot_owner[p]
        free = mshrs - len(pool)
        if free:
            completion = cycle + config.memory_latency
            # Single-grant rounds over the rotating slot order split a scarce
            # pool evenly (within one request) among the wanting threads.
            while free:
                granted = False
                for s in slot_order:
                    t = owners[s]
                    if outstanding[t] < demand[t] and frozen[t] <= cycle:
                        pool.append((completion, t))
                        outstanding[t] += 1
                        free -= 1
                        granted = True
                        if not free:
                            break
                if not granted:
                    break
        if not free:
            # Pool exhausted: every resident thread still wanting stalls.
            for s in slot_order:
                t = owners[s]
                if outstanding[t] < demand[t] and frozen[t] <= cycle:
                    stalls[t] += 1
        assert len(pool) <= mshrs

    occ = state.occupancy_accum
    occ_total = state.occupancy_total
    left = state.phase_left
    for t in range(len(outstanding)):
        o = outstanding[t]
        occ[t] += o
        occ_total[t] += o
        remaining = left[t] - 1
        if remaining:
            left[t] = remaining
        else:
            _advance_phase(state, t)

    proc_total = state.proc_occupancy_total
    for p, pool in enumerate(state.pools):
        proc_total[p] += len(pool)

    state.cycle = cycle + 1
    return state


def sample_mlp(state: SimState, config: SystemConfig) -> MlpVector:
    """Windowed mean occupancy per thread, sampled at a quantum boundary.

    The accumulator must cover exactly the final ``window_cycles`` of the
    elapsed quantum (the run loop resets it at the window start); sampling
    resets it again, so windows tumble.  Calling off-boundary is a contract
    violation.
    """
    q = config.quantum_cycles
    if state.cycle == 0 or state.cycle % q:
        raise RuntimeError(
            f"sample_mlp called at cycle {state.cycle}, which is not a quantum boundary"
        )
    window = config.window_cycles
    values = tuple(a / window for a in state.occupancy_accum)
    for t in range(len(state.occupancy_accum)):
        state.occupancy_accum[t] = 0
    return values


@dataclass(frozen=True)
class QuantumRecord:
    """One quantum of history.

    ``schedule`` is the placement that was active during the quantum;
    ``chosen`` is the policy's answer to the counters sampled at its end
    (it becomes the next quantum's ``schedule``), and ``quality`` scores
    ``chosen`` against those counters.
    """

    index: int
    sampled_mlp: MlpVector
    schedule: Schedule
    chosen: Schedule
    quality: ScheduleQuality
    completed: tuple[int, ...]
    stalls: tuple[int, ...]


@dataclass(frozen=True)
class SimulationTotals:
    completed_per_thread: tuple[int, ...]
    completed: int
    stall_cycles_per_thread: tuple[int, ...]
    stall_cycles: int
    occupancy_integral: tuple[int, ...]          # per thread, whole run
    mean_processor_occupancy: tuple[float, ...]
    cycles: int
    throughput: float


@dataclass(frozen=True)
class SimulationReport:
    config: SystemConfig
    policy: Policy
    seed: int
    per_quantum: tuple[QuantumRecord, ...]
    totals: SimulationTotals


def _check_workloads(workloads: Sequence[ThreadWorkload], config: SystemConfig) -> None:
    n = config.num_threads
    if len(workloads) != n:
        raise ConfigError(
            f"run needs exactly {n} thread workloads (pad_workloads first), got {len(workloads)}"
        )
    for index, w in enumerate(workloads):
        if w.thread != index:
            raise ConfigError(
                f"workload thread ids must be 0..{n - 1} in order; "
                f"position {index} holds thread {w.thread}"
            )
        for ph in w.phases:
            if ph.demand > config.mshrs_per_processor:
                raise ConfigError(
                    f"thread {w.thread}: phase demand {ph.demand} exceeds the "
                    f"{config.mshrs_per_processor}-entry MSHR pool"
                )


def run_simulation(
    config: SystemConfig,
    workloads: Sequence[ThreadWorkload],
    policy: Policy | str,
    seed: int = 0,
    total_quanta: int = 1,
) -> SimulationReport:
    """Drive the feedback loop: simulate a quantum, sample counters, reschedule.

    The first quantum starts from the row-major placement.  At each boundary
    the sampled counters feed the policy (the random policy draws with
    ``quantum_seed(seed, q)``); threads whose processor changed are frozen
    for ``migration_penalty`` cycles while their in-flight requests drain on
    the old pool.  The report is deterministic in every argument.
    """
    policy = Policy(policy)
    if total_quanta < 1:
        raise ValueError(f"total_quanta must be >= 1, got {total_quanta}")
    _check_workloads(workloads, config)

    n = config.num_threads
    q_len = config.quantum_cycles
    window = config.window_cycles
    state = SimState.initial(config, initial_schedule(config), workloads)

    records: list[QuantumRecord] = []
    completed_total = [0] * n
    stalls_total = [0] * n
    for q in range(total_quanta):
        boundary = (q + 1) * q_len
        window_start = boundary - window
        active = state.schedule
        while state.cycle < boundary:
            if state.cycle == window_start:
                for t in range(n):
                    state.occupancy_accum[t] = 0
            step_cycle(state, config)

        mlp = sample_mlp(state, config)
        chosen = next_schedule(policy, mlp, config, active, quantum_seed(seed, q))
        quality = processor_load(chosen, mlp, config)
        completed_q = tuple(state.completed_quantum)
        stalls_q = tuple(state.stalls_quantum)
        records.append(
            QuantumRecord(
                index=q,
                sampled_mlp=mlp,
                schedule=active,
                chosen=chosen,
                quality=quality,
                completed=completed_q,
                stalls=stalls_q,
            )
        )
        for t in range(n):
            completed_total[t] += completed_q[t]
            stalls_total[t] += stalls_q[t]
            state.completed_quantum[t] = 0
            state.stalls_quantum[t] = 0
            if chosen.placement[t][0] != active.placement[t][0]:
                state.frozen_until[t] = boundary + config.migration_penalty
        state._index_schedule(chosen)

    cycles = total_quanta * q_len
    total_completed = sum(completed_total)
    totals = SimulationTotals(
        completed_per_thread=tuple(completed_total),
        completed=total_completed,
        stall_cycles_per_thread=tuple(stalls_total),
        stall_cycles=sum(stalls_total),
        occupancy_integral=tuple(state.occupancy_total),
        mean_processor_occupancy=tuple(pt / cycles for pt in state.proc_occupancy_total),
        cycles=cycles,
        throughput=total_completed / cycles,
    )
    return SimulationReport(
        config=config,
        policy=policy,
        seed=seed,
        per_quantum=tuple(records),
        totals=totals,
    )


def throughput(report: SimulationReport) -> float:
    """Completed requests per simulated cycle."""
    if report.totals.cycles == 0:
        raise ValueError("cannot compute throughput of a zero-cycle report")
    return report.totals.completed / report.totals.cycles
