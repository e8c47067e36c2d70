"""Continuous-time event-driven execution of a policy on a workload.

Between consecutive events (arrivals, completions) every count is constant,
so the policy's rates are constant and remaining work falls linearly. The
engine records each such interval, which makes every cost and potential
integral an exact finite sum.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .model import COMPLETION_TOL, Job, Kind, SystemState, Task, TaskState, Workload
from .policies import ConfigurationError, Policy, ScheduleDecision
from .power import PowerFunction


class InvariantViolation(RuntimeError):
    """A policy decision or a finished run broke a model invariant."""


class TrajectoryRangeError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    t_start: float
    t_end: float
    decision: ScheduleDecision
    counts: dict[str, int]
    state: SystemState | None = None

    @property
    def length(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # "arrival" | "completion" | "cascade"
    job_id: int
    task_id: int | None = None


_ZERO_COUNTS = dict(n=0, n_f=0, n_c=0, n_fr=0, m=0, J=0, r_f=0, r=0, n_jobs=0)


@dataclass
class Trajectory:
    workload: Workload
    policy: Policy
    K: int
    power: PowerFunction
    jobs: list[Job]
    intervals: list[Interval] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)

    @property
    def start(self) -> float:
        return self.intervals[0].t_start if self.intervals else 0.0

    @property
    def end(self) -> float:
        return self.intervals[-1].t_end if self.intervals else 0.0

    @property
    def complete(self) -> bool:
        return all(j.done for j in self.jobs)

    @property
    def tasks(self) -> Iterator[Task]:
        for job in self.jobs:
            yield from job.tasks

    def event_times(self) -> list[float]:
        return sorted({iv.t_start for iv in self.intervals} | {self.end}) if self.intervals else []

    def to_csv(self, path: str | Path) -> None:
        """Write ``t_start,t_end,server,task_id,rate`` rows, one per lane per interval."""
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t_start", "t_end", "server", "task_id", "rate"])
            for iv in self.intervals:
                for k, lane in iv.decision.lanes():
                    out.writerow([repr(iv.t_start), repr(iv.t_end), k, lane.task_id, repr(lane.rate)])


def _validate(decision: ScheduleDecision, state: SystemState, policy: Policy, K: int) -> dict[int, float]:
    if len(decision.servers) != K:
        raise InvariantViolation(f"decision has {len(decision.servers)} servers, expected {K}")
    free_ids = {t.task_id for t in state.free_tasks}
    seen: set[int] = set()
    for _, lane in decision.lanes():
        if not (math.isfinite(lane.rate) and lane.rate >= 0):
            raise InvariantViolation(f"non-finite or negative rate {lane.rate} for task {lane.task_id}")
        if lane.task_id not in state.by_id:
            raise InvariantViolation(f"task {lane.task_id} is not outstanding at t={state.time}")
        if policy.respects_precedence and lane.task_id not in free_ids:
            raise InvariantViolation(f"caged task {lane.task_id} scheduled at t={state.time}")
        if lane.task_id in seen:
            raise InvariantViolation(f"task {lane.task_id} occupies two lanes at t={state.time}")
        seen.add(lane.task_id)
    if not all(math.isfinite(s) and s >= 0 for s in decision.speeds):
        raise InvariantViolation("non-finite server speed")
    return {tid: rate for tid, rate in decision.rates().items() if rate > 0}


def run(workload: Workload, policy: Policy, K: int, power: PowerFunction,
        record_states: bool = True) -> Trajectory:
    """Simulate ``policy`` on ``workload`` until every task is finished.

    At each event instant completions are applied first, then arrivals, then
    zero-size tasks that have become processable are finished (to a fixpoint),
    and finally the policy is consulted once.
    """
    policy.check_servers(K)
    if policy.requires_equalized and not workload.is_equalized:
        raise ConfigurationError(f"{policy.name} needs a workload with equalized reduce counts")

    jobs = workload.instantiate()
    traj = Trajectory(workload, policy, K, power, jobs)
    if not jobs:
        return traj

    reduce_counts: dict[int, int] = {}
    outstanding: dict[int, Task] = {}
    maps_left: dict[int, int] = {}
    arrival_of: dict[int, float] = {}
    idle = ScheduleDecision(((),) * K)

    def release_reduces(job: Job, t: float) -> None:
        for task in job.reduce_tasks:
            if task.size == 0 and not task.done:
                task.remaining, task.completion_time = 0.0, t
                traj.events.append(Event(t, "cascade", job.job_id, task.task_id))

    def admit(job: Job, t: float) -> None:
        traj.events.append(Event(t, "arrival", job.job_id))
        reduce_counts[job.job_id] = len(job.reduce_tasks)
        arrival_of[job.job_id] = job.arrival
        maps_left[job.job_id] = 0
        for task in job.tasks:
            if task.size > 0:
                outstanding[task.task_id] = task
                if task.kind is Kind.MAP:
                    maps_left[job.job_id] += 1
            elif task.kind is Kind.MAP:
                task.remaining, task.completion_time = 0.0, t
                traj.events.append(Event(t, "cascade", job.job_id, task.task_id))
        if maps_left[job.job_id] == 0:
            release_reduces(job, t)

    def snapshot(t: float) -> SystemState:
        return SystemState(t, tuple(
            TaskState(x.task_id, x.job_id, x.kind, x.remaining, arrival_of[x.job_id])
            for x in outstanding.values()
        ), reduce_counts)

    nxt = 0
    t = jobs[0].arrival
    while True:
        while nxt < len(jobs) and jobs[nxt].arrival <= t:
            admit(jobs[nxt], t)
            nxt += 1
        t_arrival = jobs[nxt].arrival if nxt < len(jobs) else math.inf

        if not outstanding:
            if nxt == len(jobs):
                break
            traj.intervals.append(Interval(t, t_arrival, idle, dict(_ZERO_COUNTS),
                                           snapshot(t) if record_states else None))
            t = t_arrival
            continue

        state = snapshot(t)
        decision = policy.decide(state, K, power)
        rates = _validate(decision, state, policy, K)
        if not rates:
            raise InvariantViolation(f"no task makes progress at t={t}")

        first, dt_done = min(((tid, outstanding[tid].remaining / rate) for tid, rate in rates.items()),
                             key=lambda p: (p[1], p[0]))
        if t_arrival - t <= dt_done:
            dt, t_end = t_arrival - t, t_arrival
        else:
            dt, t_end = dt_done, t + dt_done
        if not (math.isfinite(dt) and dt > 0):
            raise InvariantViolation(f"degenerate interval of length {dt} at t={t}")
        traj.intervals.append(Interval(t, t_end, decision, state.counts(),
                                       state if record_states else None))

        finished = []
        for tid, rate in rates.items():
            task = outstanding[tid]
            task.remaining -= rate * dt
            if task.remaining <= COMPLETION_TOL or (tid == first and dt == dt_done):
                finished.append(task)
        t = t_end
        for task in sorted(finished, key=lambda x: x.task_id):
            task.remaining, task.completion_time = 0.0, t
            del outstanding[task.task_id]
            traj.events.append(Event(t, "completion", task.job_id, task.task_id))
            if task.kind is Kind.MAP:
                maps_left[task.job_id] -= 1
                if maps_left[task.job_id] == 0:
                    release_reduces(jobs[task.job_id], t)

    if not traj.complete:
        raise InvariantViolation("run ended with unfinished tasks")
    return traj


def snapshot_at(traj: Trajectory, t: float, side: str = "right") -> SystemState:
    """Exact state at time ``t``.

    ``side='right'`` gives the state after any event at ``t`` (the engine's
    convention); ``side='left'`` gives the limit from the left, in which tasks
    finishing exactly at ``t`` are still listed with zero remaining work.
    """
    if not traj.intervals:
        raise TrajectoryRangeError("trajectory is empty")
    if traj.intervals[0].state is None:
        raise TrajectoryRangeError("trajectory was recorded without states")
    if not traj.start <= t <= traj.end:
        raise TrajectoryRangeError(f"t={t} outside [{traj.start}, {traj.end}]")
    starts = [iv.t_start for iv in traj.intervals]
    if side == "right":
        if t == traj.end:
            last = traj.intervals[-1].state
            return SystemState(t, (), last.reduce_counts)
        i = bisect.bisect_right(starts, t) - 1
    elif side == "left":
        if t == traj.start:
            first = traj.intervals[0].state
            return SystemState(t, (), first.reduce_counts)
        i = bisect.bisect_left(starts, t) - 1
    else:
        raise ValueError("side must be 'left' or 'right'")
    iv = traj.intervals[i]
    return advance(iv.state, iv.decision, t)


def advance(state: SystemState, decision: ScheduleDecision, t: float) -> SystemState:
    """Move ``state`` forward to time ``t`` under the constant rates of ``decision``."""
    dt = t - state.time
    if dt == 0:
        return state
    rates = decision.rates()
    tasks = tuple(
        x._replace(remaining=max(0.0, x.remaining - rates[x.task_id] * dt)) if x.task_id in rates else x
        for x in state.tasks
    )
    return SystemState(t, tasks, state.reduce_counts)


# Invariant checks --------------------------------------------------------------

def check_tiling(traj: Trajectory) -> None:
    for a, b in zip(traj.intervals, traj.intervals[1:]):
        if a.t_end != b.t_start:
            raise InvariantViolation(f"gap or overlap between {a.t_end} and {b.t_start}")
    for iv in traj.intervals:
        if not iv.t_end > iv.t_start:
            raise InvariantViolation(f"empty interval at {iv.t_start}")
    if traj.intervals:
        if traj.start != traj.jobs[0].arrival:
            raise InvariantViolation("trajectory does not start at the first arrival")
        last = max(j.completion_time for j in traj.jobs)
        if traj.end != last:
            raise InvariantViolation("trajectory does not end at the last completion")


def check_precedence_and_split(traj: Trajectory) -> None:
    for iv in traj.intervals:
        if iv.state is None:
            raise InvariantViolation("states not recorded")
        seen: set[int] = set()
        left = iv.state.maps_left
        for _, lane in iv.decision.lanes():
            if lane.task_id in seen:
                raise InvariantViolation(f"task {lane.task_id} split at t={iv.t_start}")
            seen.add(lane.task_id)
            task = iv.state.by_id[lane.task_id]
            if traj.policy.respects_precedence and not task.is_map and left[task.job_id] > 0:
                raise InvariantViolation(f"reduce task {lane.task_id} ran before its maps at t={iv.t_start}")


def processed_work(traj: Trajectory) -> float:
    return math.fsum(lane.rate * iv.length for iv in traj.intervals for _, lane in iv.decision.lanes())


def check_work_conservation(traj: Trajectory, rtol: float = 1e-9) -> None:
    total = traj.workload.total_work
    done = processed_work(traj)
    if abs(done - total) > rtol * max(total, 1e-300):
        raise InvariantViolation(f"processed {done!r} but workload holds {total!r}")
