"""Scheduling and speed-scaling policies.

A policy maps a :class:`~mrspeed.model.SystemState` to a
:class:`ScheduleDecision`: for every server, the tasks it runs and at what
rate. Decisions depend only on counts and on the ordering of remaining sizes,
so the engine only needs to ask again at arrivals and completions.
"""

from __future__ import annotations

import dataclasses
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .model import SystemState, TaskState, sort_key
from .power import PowerFunction


class ConfigurationError(ValueError):
    """A policy was asked to run outside the setting it is defined for."""


class Lane(NamedTuple):
    task_id: int
    rate: float


@dataclass(frozen=True)
class ScheduleDecision:
    """Per-server lanes. A server with no lanes runs at ``idle_speed``."""

    servers: tuple[tuple[Lane, ...], ...]
    idle_speed: float = 0.0

    @property
    def speeds(self) -> tuple[float, ...]:
        return tuple(math.fsum(l.rate for l in lanes) if lanes else self.idle_speed
                     for lanes in self.servers)

    def lanes(self):
        for k, lanes in enumerate(self.servers):
            for lane in lanes:
                yield k, lane

    def rates(self) -> dict[int, float]:
        """Total processing rate per scheduled task."""
        out: dict[int, float] = defaultdict(float)
        for _, lane in self.lanes():
            out[lane.task_id] += lane.rate
        return dict(out)

    def scaled(self, factor: float) -> "ScheduleDecision":
        return ScheduleDecision(
            tuple(tuple(Lane(l.task_id, l.rate * factor) for l in lanes) for lanes in self.servers),
            self.idle_speed * factor,
        )

    @classmethod
    def from_assignment(cls, K: int, per_server: list[list[Lane]]) -> "ScheduleDecision":
        servers = [tuple(l for l in lanes if l.rate > 0) for lanes in per_server]
        servers += [()] * (K - len(servers))
        return cls(tuple(servers))


def _one_per_server(K: int, picks: list[tuple[TaskState, float]]) -> ScheduleDecision:
    return ScheduleDecision.from_assignment(K, [[Lane(t.task_id, rate)] for t, rate in picks])


# Job-SRPT ---------------------------------------------------------------------

def job_srpt_decide(state: SystemState, K: int, power: PowerFunction,
                    relaxed: bool = False) -> ScheduleDecision:
    """Serve the K jobs with least cumulative remaining work, one task each.

    With fewer than K jobs every job gets a server and the spare servers take
    the shortest free tasks not yet running. ``relaxed`` ignores precedence.
    """
    free = state.tasks if relaxed else state.free_tasks
    by_job: dict[int, list[TaskState]] = defaultdict(list)
    for t in free:
        by_job[t.job_id].append(t)
    work: dict[int, float] = defaultdict(float)
    arrival: dict[int, float] = {}
    for t in state.tasks:
        work[t.job_id] += t.remaining
        arrival[t.job_id] = t.arrival
    jobs = sorted(work, key=lambda j: (work[j], arrival[j], j))
    n = len(jobs)
    if n == 0:
        return ScheduleDecision.from_assignment(K, [])

    speed = power.inverse(n / K) if n >= K else power.inverse(1.0)
    picks = [min(by_job[j], key=sort_key) for j in jobs[:K]]
    if n < K:
        running = {t.task_id for t in picks}
        spare = sorted((t for t in free if t.task_id not in running), key=sort_key)
        picks += spare[:K - n]
    return _one_per_server(K, [(t, speed) for t in picks])


# Task-SRPT --------------------------------------------------------------------

def task_srpt_decide(state: SystemState, K: int, power: PowerFunction,
                     relaxed: bool = False) -> ScheduleDecision:
    """Serve the min(n_f, K) shortest free tasks.

    With at least K free tasks every busy server runs at P^-1((n+1)/K);
    otherwise a map task runs at P^-1((load + b_hat + 1)/b_hat) and a free
    reduce task at P^-1(1).
    """
    free = sorted(state.tasks if relaxed else state.free_tasks, key=sort_key)
    if len(free) >= K:
        speed = power.inverse((state.n + 1) / K)
        return _one_per_server(K, [(t, speed) for t in free[:K]])
    picks = []
    for t in free:
        if t.is_map:
            b_hat = min(state.brothers(t), K)
            ell = state.reduce_counts[t.job_id] + 1
            picks.append((t, power.inverse((ell + b_hat + 1) / b_hat)))
        else:
            picks.append((t, power.inverse(1.0)))
    return _one_per_server(K, picks)


def baseline_noprec_decide(state: SystemState, K: int, power: PowerFunction,
                           mode: str = "task") -> ScheduleDecision:
    """The job/task SRPT rules with every task treated as free."""
    if mode == "task":
        return task_srpt_decide(state, K, power, relaxed=True)
    if mode == "job":
        return job_srpt_decide(state, K, power, relaxed=True)
    raise ConfigurationError(f"mode must be 'job' or 'task', got {mode!r}")


# Triple-lane policies -----------------------------------------------------------

def _common_reduce_count(state: SystemState) -> int:
    counts = {state.reduce_counts[j] for j in state.map_counts}
    if len(counts) > 1:
        raise ConfigurationError("triple-lane policies need equalized reduce counts")
    return counts.pop() if counts else 0


def _jobs_by_map_work(maps: list[TaskState]) -> tuple[list[int], dict[int, list[TaskState]]]:
    per_job: dict[int, list[TaskState]] = defaultdict(list)
    for t in maps:
        per_job[t.job_id].append(t)
    q = {j: math.fsum(t.remaining for t in ts) for j, ts in per_job.items()}
    order = sorted(per_job, key=lambda j: (q[j], per_job[j][0].arrival, j))
    return order, per_job


def triple_single_decide(state: SystemState, power: PowerFunction, K: int = 1) -> ScheduleDecision:
    """Single server running up to three lanes at once.

    M1 is the globally shortest map task at P^-1(m+1), M2 the shortest map
    task of the job with least remaining map work at P^-1(r J + 1), and R_f
    the shortest free reduce task at P^-1(r_f + 1). When M1 and M2 pick the
    same task it gets one lane with the summed rate.
    """
    if K != 1:
        raise ConfigurationError(f"triple_single runs on one server, got K={K}")
    r = _common_reduce_count(state)
    maps = [t for t in state.tasks if t.is_map]
    reduces = [t for t in state.free_tasks if not t.is_map]
    lanes: dict[int, float] = {}
    if maps:
        m1 = min(maps, key=sort_key)
        lanes[m1.task_id] = power.inverse(len(maps) + 1)
        order, per_job = _jobs_by_map_work(maps)
        m2 = min(per_job[order[0]], key=sort_key)
        lanes[m2.task_id] = lanes.get(m2.task_id, 0.0) + power.inverse(r * len(per_job) + 1)
    if reduces:
        lanes[min(reduces, key=sort_key).task_id] = power.inverse(len(reduces) + 1)
    return ScheduleDecision.from_assignment(1, [[Lane(i, s) for i, s in lanes.items()]])


def triple_multi_decide(state: SystemState, K: int, power: PowerFunction) -> ScheduleDecision:
    """K-server version of the triple-lane policy.

    Groups: the min(m, K) shortest map tasks at P^-1(min((m+1)/K, 1)); the
    shortest map task of each of the min(J, K) jobs with least remaining map
    work at P^-1(min((r J + 1)/K, r)); the min(r_f, K) shortest free reduce
    tasks at P^-1(min((r_f + 1)/K, 1)). Each server holds at most one lane per
    group; a task picked by both map groups shares one lane.
    """
    r = _common_reduce_count(state)
    maps = sorted((t for t in state.tasks if t.is_map), key=sort_key)
    reduces = sorted((t for t in state.free_tasks if not t.is_map), key=sort_key)
    m, r_f = len(maps), len(reduces)
    order, per_job = _jobs_by_map_work(maps)
    J = len(order)

    servers: list[list[Lane]] = [[] for _ in range(K)]
    where: dict[int, int] = {}
    s_m = power.inverse(min((m + 1) / K, 1.0))
    for k, t in enumerate(maps[:K]):
        servers[k].append(Lane(t.task_id, s_m))
        where[t.task_id] = k

    s_cm = power.inverse(min((r * J + 1) / K, r))
    second = [min(per_job[j], key=sort_key) for j in order[:K]]
    has_m2 = [False] * K
    if s_cm > 0:
        for t in second:
            if t.task_id in where:
                k = where[t.task_id]
                lanes = servers[k]
                i = next(i for i, l in enumerate(lanes) if l.task_id == t.task_id)
                lanes[i] = Lane(t.task_id, lanes[i].rate + s_cm)
                has_m2[k] = True
        for t in second:
            if t.task_id not in where:
                k = has_m2.index(False)
                servers[k].append(Lane(t.task_id, s_cm))
                has_m2[k] = True

    s_f = power.inverse(min((r_f + 1) / K, 1.0))
    for k, t in enumerate(reduces[:K]):
        servers[k].append(Lane(t.task_id, s_f))
    return ScheduleDecision.from_assignment(K, servers)


# Policy records ------------------------------------------------------------------

DecideFn = Callable[[SystemState, int, PowerFunction], ScheduleDecision]

_DECIDERS: dict[str, DecideFn] = {
    "job_srpt": job_srpt_decide,
    "task_srpt": task_srpt_decide,
    "triple_single": lambda s, K, p: triple_single_decide(s, p, K),
    "triple_multi": triple_multi_decide,
    "baseline_job": lambda s, K, p: baseline_noprec_decide(s, K, p, "job"),
    "baseline_task": lambda s, K, p: baseline_noprec_decide(s, K, p, "task"),
}

POLICY_NAMES = tuple(_DECIDERS)
IDLE_RULES = ("zero", "p1")


@dataclass(frozen=True)
class Policy:
    """A named policy plus the knobs that modify every decision it makes.

    ``speed_multiplier`` scales every rate (used to build sped-up comparison
    schedules). ``idle_speed_rule='p1'`` keeps servers that have no task
    spinning at P^-1(1) while the system is nonempty.
    """

    name: str
    speed_multiplier: float = 1.0
    idle_speed_rule: str = "zero"

    def __post_init__(self) -> None:
        if self.name not in _DECIDERS:
            raise ConfigurationError(f"unknown policy {self.name!r}; choose from {', '.join(POLICY_NAMES)}")
        if not self.speed_multiplier > 0:
            raise ConfigurationError(f"speed multiplier must be > 0, got {self.speed_multiplier}")
        if self.idle_speed_rule not in IDLE_RULES:
            raise ConfigurationError(f"idle_speed_rule must be one of {IDLE_RULES}")

    @property
    def requires_equalized(self) -> bool:
        return self.name.startswith("triple")

    @property
    def respects_precedence(self) -> bool:
        return not self.name.startswith("baseline")

    def check_servers(self, K: int) -> None:
        if K < 1:
            raise ConfigurationError(f"need at least one server, got K={K}")
        if self.name == "triple_single" and K != 1:
            raise ConfigurationError("triple_single requires K=1")

    def decide(self, state: SystemState, K: int, power: PowerFunction) -> ScheduleDecision:
        decision = _DECIDERS[self.name](state, K, power)
        if self.idle_speed_rule == "p1" and not state.empty:
            decision = dataclasses.replace(decision, idle_speed=power.inverse(1.0))
        if self.speed_multiplier != 1.0:
            decision = decision.scaled(self.speed_multiplier)
        return decision

    __call__ = decide


def speed_multiplier_wrap(policy: Policy, gamma: float) -> Policy:
    """The same policy with every rate multiplied by ``gamma``."""
    if not gamma > 0:
        raise ConfigurationError(f"gamma must be > 0, got {gamma}")
    return dataclasses.replace(policy, speed_multiplier=policy.speed_multiplier * gamma)
