"""Jobs, tasks, MapReduce precedence, and the instantaneous system state."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

# Remaining work at or below this is treated as finished.
COMPLETION_TOL = 1e-12


class Kind(str, enum.Enum):
    MAP = "map"
    REDUCE = "reduce"


class ModelError(ValueError):
    """Raised for queries that make no sense for the given task or state."""


@dataclass(frozen=True)
class JobSpec:
    """Static description of one job: its release time and task sizes."""

    arrival: float
    map_sizes: tuple[float, ...]
    reduce_sizes: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "map_sizes", tuple(float(x) for x in self.map_sizes))
        object.__setattr__(self, "reduce_sizes", tuple(float(x) for x in self.reduce_sizes))
        if self.arrival < 0:
            raise ModelError(f"arrival must be >= 0, got {self.arrival}")
        for x in self.map_sizes + self.reduce_sizes:
            if not x >= 0:
                raise ModelError(f"task sizes must be >= 0, got {x}")

    @property
    def work(self) -> float:
        return sum(self.map_sizes) + sum(self.reduce_sizes)


@dataclass(frozen=True)
class Workload:
    """An arrival sequence; jobs are kept in canonical order (arrival, then input order)."""

    jobs: tuple[JobSpec, ...] = ()

    def __post_init__(self) -> None:
        ordered = sorted(enumerate(self.jobs), key=lambda p: (p[1].arrival, p[0]))
        object.__setattr__(self, "jobs", tuple(j for _, j in ordered))

    def __len__(self) -> int:
        return len(self.jobs)

    @property
    def total_work(self) -> float:
        return sum(j.work for j in self.jobs)

    @property
    def n_tasks(self) -> int:
        return sum(len(j.map_sizes) + len(j.reduce_sizes) for j in self.jobs)

    @property
    def reduce_counts(self) -> list[int]:
        return [len(j.reduce_sizes) for j in self.jobs]

    @property
    def is_equalized(self) -> bool:
        return len(set(self.reduce_counts)) <= 1

    def instantiate(self) -> list["Job"]:
        """Fresh mutable jobs/tasks; job ids follow canonical order, task ids are global."""
        jobs: list[Job] = []
        next_id = 0
        for job_id, spec in enumerate(self.jobs):
            maps = []
            for size in spec.map_sizes:
                maps.append(Task(next_id, job_id, Kind.MAP, size))
                next_id += 1
            reduces = []
            for size in spec.reduce_sizes:
                reduces.append(Task(next_id, job_id, Kind.REDUCE, size))
                next_id += 1
            jobs.append(Job(job_id, spec.arrival, maps, reduces))
        return jobs


@dataclass(eq=False)
class Task:
    task_id: int
    job_id: int
    kind: Kind
    size: float
    remaining: float = field(default=None)  # type: ignore[assignment]
    completion_time: float | None = None

    def __post_init__(self) -> None:
        if self.remaining is None:
            self.remaining = self.size

    @property
    def done(self) -> bool:
        return self.completion_time is not None


@dataclass(eq=False)
class Job:
    job_id: int
    arrival: float
    map_tasks: list[Task]
    reduce_tasks: list[Task]

    @property
    def tasks(self) -> list[Task]:
        return self.map_tasks + self.reduce_tasks

    @property
    def done(self) -> bool:
        return all(t.done for t in self.tasks)

    @property
    def completion_time(self) -> float | None:
        if not self.done:
            return None
        return max((t.completion_time for t in self.tasks), default=self.arrival)

    @property
    def flow_time(self) -> float | None:
        c = self.completion_time
        return None if c is None else c - self.arrival


class TaskState(NamedTuple):
    """Frozen view of one outstanding task inside a :class:`SystemState`."""

    task_id: int
    job_id: int
    kind: Kind
    remaining: float
    arrival: float

    @property
    def is_map(self) -> bool:
        return self.kind is Kind.MAP


@dataclass(frozen=True)
class SystemState:
    """Snapshot of the outstanding positive-size tasks at one instant.

    ``reduce_counts`` maps every job that has ever been visible to its total
    number of reduce tasks (zero-size padding included); it is what the load
    of a map task is computed from. Zero-size tasks never appear in ``tasks``.
    """

    time: float
    tasks: tuple[TaskState, ...]
    reduce_counts: Mapping[int, int]

    @cached_property
    def by_id(self) -> dict[int, TaskState]:
        return {t.task_id: t for t in self.tasks}

    @cached_property
    def maps_left(self) -> Counter:
        """Outstanding map tasks per job (the brother counts b)."""
        return Counter(t.job_id for t in self.tasks if t.is_map and t.remaining > COMPLETION_TOL)

    @cached_property
    def free_tasks(self) -> tuple[TaskState, ...]:
        left = self.maps_left
        return tuple(t for t in self.tasks if t.is_map or left[t.job_id] == 0)

    @cached_property
    def job_ids(self) -> tuple[int, ...]:
        return tuple(sorted({t.job_id for t in self.tasks}))

    @property
    def empty(self) -> bool:
        return not self.tasks

    # Counts -----------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.tasks)

    @property
    def n_f(self) -> int:
        return len(self.free_tasks)

    @property
    def n_c(self) -> int:
        return self.n - self.n_f

    @property
    def m(self) -> int:
        return sum(1 for t in self.tasks if t.is_map)

    @property
    def n_fr(self) -> int:
        return self.n_f - self.m

    r_f = n_fr

    @property
    def r(self) -> int:
        return self.n - self.m

    @property
    def J(self) -> int:
        return len(self.map_counts)

    @property
    def n_jobs(self) -> int:
        return len(self.job_ids)

    @cached_property
    def map_counts(self) -> Counter:
        return Counter(t.job_id for t in self.tasks if t.is_map)

    def brothers(self, task: TaskState) -> int:
        if not task.is_map:
            raise ModelError("brother counts are defined for map tasks only")
        return self.map_counts[task.job_id]

    def counts(self) -> dict[str, int]:
        return {
            "n": self.n, "n_f": self.n_f, "n_c": self.n_c, "n_fr": self.n_fr, "m": self.m,
            "J": self.J, "r_f": self.r_f, "r": self.r, "n_jobs": self.n_jobs,
        }

    def remaining_of(self, task_id: int) -> float:
        """Remaining work of ``task_id``; 0 for tasks that are finished or absent."""
        t = self.by_id.get(task_id)
        return 0.0 if t is None else t.remaining

    def job_tasks(self, job_id: int) -> list[TaskState]:
        return [t for t in self.tasks if t.job_id == job_id]


def sort_key(task: TaskState) -> tuple[float, float, int]:
    """Tie-breaking order used everywhere: remaining, then arrival, then id."""
    return (task.remaining, task.arrival, task.task_id)


def is_free(task: TaskState, state: SystemState) -> bool:
    if task.task_id not in state.by_id or task.remaining <= COMPLETION_TOL:
        raise ModelError(f"task {task.task_id} is not outstanding at t={state.time}")
    return task.is_map or state.maps_left[task.job_id] == 0


def load(task: TaskState, state: SystemState) -> int:
    if not task.is_map:
        raise ModelError("load is defined for map tasks only")
    return state.reduce_counts[task.job_id] + 1


def z_value(task: TaskState, state: SystemState, K: int) -> float:
    """``(load + b_hat) / b_hat`` with ``b_hat = min(brothers, K)``."""
    ell = load(task, state)
    b_hat = min(state.brothers(task), K)
    return (ell + b_hat) / b_hat


def cumulative_remaining(job_id: int, state: SystemState, scope: str = "all") -> float:
    if scope not in ("all", "map"):
        raise ModelError(f"scope must be 'all' or 'map', got {scope!r}")
    return sum(t.remaining for t in state.tasks
               if t.job_id == job_id and (scope == "all" or t.is_map))


def beta_of_instance(workload: Workload | Iterable[JobSpec]) -> float:
    """Largest task size over the smallest positive reduce size."""
    jobs: Sequence[JobSpec] = workload.jobs if isinstance(workload, Workload) else list(workload)
    reduces = [x for j in jobs for x in j.reduce_sizes if x > 0]
    if not reduces:
        raise ModelError("beta is undefined without a positive-size reduce task")
    largest = max(x for j in jobs for x in j.map_sizes + j.reduce_sizes)
    return largest / min(reduces)
