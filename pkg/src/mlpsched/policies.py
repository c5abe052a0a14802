"""Thread-to-processor scheduling policies.

The policy of interest is the serpentine assignment: sort threads by their
sampled memory-level parallelism and deal them across the K processors in
alternating forward/reverse passes, so the heaviest thread of each pass lands
where the previous pass left its lightest and the per-processor totals stay
balanced.  Sorting dominates, so the whole policy is O(N log N).

The rest are baselines and an oracle:

* ``naive_sorted`` -- the same sorted deal without the alternation (every
  pass runs forward), which piles the heavy threads onto low processor ids.
* ``round_robin``  -- counter-oblivious rotation of the previous placement.
* ``random``       -- uniform random placement from a seeded generator.
* ``static``       -- keep the previous placement unchanged.
* ``optimal``      -- exhaustive minimum-makespan search, small N only; used
  to judge how close serpentine gets to the best achievable balance.

All policies are pure functions: the same inputs (and seed, where one
applies) always produce the same schedule, and every output passes
``validate_schedule``.
"""

from __future__ import annotations

import random
from enum import Enum
from typing import Sequence

from .core import Schedule, SystemConfig, validate_schedule

__all__ = [
    "MAX_EXHAUSTIVE_THREADS",
    "Policy",
    "naive_sorted_schedule",
    "next_schedule",
    "optimal_partition",
    "quantum_seed",
    "random_schedule",
    "round_robin_schedule",
    "serpentine_schedule",
    "static_schedule",
]

# Exhaustive search over equal-size partitions is factorial-ish; 12 threads
# (e.g. 4x3) stays in the tens of thousands of partitions.
MAX_EXHAUSTIVE_THREADS = 12

_SEED_MIX = 0x9E3779B97F4A7C15  # 64-bit golden-ratio increment


class Policy(str, Enum):
    """Closed set of scheduler names accepted in experiment configs."""

    SERPENTINE = "serpentine"
    NAIVE_SORTED = "naive_sorted"
    ROUND_ROBIN = "round_robin"
    RANDOM = "random"
    OPTIMAL = "optimal"
    STATIC = "static"


def _descending_order(mlp: Sequence[float], config: SystemConfig) -> list[int]:
    """Thread ids by counter descending, ties broken by ascending id."""
    n = config.num_threads
    if len(mlp) != n:
        raise ValueError(f"mlp vector has {len(mlp)} entries, config schedules {n} threads")
    return sorted(range(n), key=lambda t: (-mlp[t], t))


def serpentine_schedule(mlp: Sequence[float], config: SystemConfig) -> Schedule:
    """Boustrophedon deal of the descending-sorted threads.

    Pass r (0-based) takes sorted ranks [r*K, (r+1)*K).  Even passes send
    rank r*K+j to processor j, odd passes to processor K-1-j; the thread
    occupies slot r on its processor.  Only the sort order matters, so any
    strictly increasing transform of the counters leaves the result
    unchanged.
    """
    k = config.num_processors
    placement: list[tuple[int, int]] = [(-1, -1)] * config.num_threads
    for rank, t in enumerate(_descending_order(mlp, config)):
        r, j = divmod(rank, k)
        p = j if r % 2 == 0 else k - 1 - j
        placement[t] = (p, r)
    return Schedule(tuple(placement))


def naive_sorted_schedule(mlp: Sequence[float], config: SystemConfig) -> Schedule:
    """Sorted deal without alternation: rank r*K+j always goes to processor j.

    Processor 0 collects every pass's maximum and processor K-1 every pass's
    minimum, which makes this the natural worst-of-the-sorted baselines.
    """
    k = config.num_processors
    placement: list[tuple[int, int]] = [(-1, -1)] * config.num_threads
    for rank, t in enumerate(_descending_order(mlp, config)):
        r, j = divmod(rank, k)
        placement[t] = (j, r)
    return Schedule(tuple(placement))


def round_robin_schedule(config: SystemConfig, prev: Schedule) -> Schedule:
    """Counter-oblivious rotation: (p, s) -> ((p + 1) mod K, s)."""
    validate_schedule(prev, config)
    k = config.num_processors
    return Schedule(tuple(((p + 1) % k, s) for p, s in prev.placement))


def random_schedule(config: SystemConfig, seed: int) -> Schedule:
    """Uniformly random valid placement, reproducible from the seed.

    The generator is Python's ``random.Random`` (Mersenne Twister, MT19937);
    it is part of the contract and is never changed silently, so seeds stay
    portable.
    """
    rng = random.Random(seed)
    threads = list(range(config.num_threads))
    rng.shuffle(threads)
    placement: list[tuple[int, int]] = [(-1, -1)] * len(threads)
    position = 0
    for p in range(config.num_processors):
        for s in range(config.slots_per_processor):
            placement[threads[position]] = (p, s)
            position += 1
    return Schedule(tuple(placement))


def static_schedule(config: SystemConfig, prev: Schedule) -> Schedule:
    """Keep the previous placement; the fixed-schedule baseline."""
    validate_schedule(prev, config)
    return prev


def optimal_partition(mlp: Sequence[float], config: SystemConfig) -> Schedule:
    """Exhaustive minimum-makespan oracle over equal-size thread groups.

    Enumerates every split of the N threads into K groups of L and returns a
    schedule minimizing the largest per-processor counter sum.  Ties are
    broken toward the lexicographically smallest tuple of sorted per-group
    thread ids, so the result is unique and deterministic.  Groups land on
    processors ordered by their smallest thread id; slot order follows
    ascending thread id.

    Raises if N exceeds ``MAX_EXHAUSTIVE_THREADS``.
    """
    k, l = config.num_processors, config.slots_per_processor
    n = config.num_threads
    if len(mlp) != n:
        raise ValueError(f"mlp vector has {len(mlp)} entries, config schedules {n} threads")
    if n > MAX_EXHAUSTIVE_THREADS:
        raise ValueError(
            f"{n} threads exceeds the exhaustive-search cap of {MAX_EXHAUSTIVE_THREADS}"
        )
    if any(v < 0 for v in mlp):
        raise ValueError("mlp values must be non-negative")

    # Placing heavy threads first makes the bound prune early; the canonical
    # "only the first empty group may open" rule enumerates each unordered
    # partition exactly once.
    order = sorted(range(n), key=lambda t: (-mlp[t], t))
    groups: list[list[int]] = [[] for _ in range(k)]
    sums = [0.0] * k
    best_max = float("inf")
    best_key: tuple[tuple[int, ...], ...] | None = None

    def walk(i: int) -> None:
        nonlocal best_max, best_key
        if i == n:
            key = tuple(sorted(tuple(sorted(g)) for g in groups))
            total = max(sums)
            if total < best_max or (total == best_max and (best_key is None or key < best_key)):
                best_max, best_key = total, key
            return
        t = order[i]
        v = mlp[t]
        opened_empty = False
        for g in range(k):
            group = groups[g]
            if len(group) == l:
                continue
            if not group:
                if opened_empty:
                    break  # all remaining groups are empty and interchangeable
                opened_empty = True
            if sums[g] + v > best_max:
                continue  # cannot beat or tie the incumbent (values are >= 0)
            group.append(t)
            sums[g] += v
            walk(i + 1)
            group.pop()
            sums[g] -= v

    walk(0)
    assert best_key is not None
    placement: list[tuple[int, int]] = [(-1, -1)] * n
    for p, group in enumerate(best_key):
        for s, t in enumerate(group):
            placement[t] = (p, s)
    return Schedule(tuple(placement))


def quantum_seed(seed: int, quantum: int) -> int:
    """Per-quantum seed derivation for the random policy.

    ``(seed + (quantum + 1) * 0x9E3779B97F4A7C15) mod 2**64`` -- fixed and
    documented so runs are reproducible across implementations.
    """
    return (seed + (quantum + 1) * _SEED_MIX) % (1 << 64)


def next_schedule(
    policy: Policy | str,
    mlp: Sequence[float],
    config: SystemConfig,
    prev: Schedule,
    seed: int = 0,
) -> Schedule:
    """Dispatch to a policy: (counters, config, previous schedule, seed) -> schedule."""
    policy = Policy(policy)
    if policy is Policy.SERPENTINE:
        return serpentine_schedule(mlp, config)
    if policy is Policy.NAIVE_SORTED:
        return naive_sorted_schedule(mlp, config)
    if policy is Policy.ROUND_ROBIN:
        return round_robin_schedule(config, prev)
    if policy is Policy.RANDOM:
        return random_schedule(config, seed)
    if policy is Policy.OPTIMAL:
        return optimal_partition(mlp, config)
    if policy is Policy.STATIC:
        return static_schedule(config, prev)
    raise ValueError(f"unhandled policy {policy!r}")  # pragma: no cover
