"""Arrival sequences: slotted Poisson generation, zero-size padding, JSON traces."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import JobSpec, ModelError, Workload


class TraceFormatError(ValueError):
    """A trace file could not be parsed or failed validation."""


@dataclass(frozen=True)
class WorkloadSpec:
    """Parameters of the slotted generator.

    Every slot ``t`` releases Poisson(``lam``) jobs at time ``t``; each job has
    Poisson(``mean_map_count``) map tasks (zero draws are redrawn) and
    Poisson(``mean_reduce_count``) reduce tasks, with exponential sizes.
    """

    lam: float
    slots: int
    mean_map_count: float = 2.0
    mean_reduce_count: float = 2.0
    mean_map_size: float = 3.0
    mean_reduce_size: float = 5.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lam < 0 or not math.isfinite(self.lam):
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.slots < 1:
            raise ValueError(f"slots must be >= 1, got {self.slots}")
        for name in ("mean_map_count", "mean_reduce_count", "mean_map_size", "mean_reduce_size"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` (e.g. sweep point, iteration) under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def generate(spec: WorkloadSpec, rng: np.random.Generator | None = None) -> Workload:
    """Draw a workload. With ``rng=None`` the generator is seeded from ``spec.seed``."""
    if rng is None:
        rng = stream(spec.seed)
    per_slot = rng.poisson(spec.lam, size=spec.slots)
    n_jobs = int(per_slot.sum())
    if n_jobs == 0:
        return Workload(())
    arrivals = np.repeat(np.arange(spec.slots, dtype=float), per_slot)

    maps = rng.poisson(spec.mean_map_count, size=n_jobs)
    while (zero := maps == 0).any():
        maps[zero] = rng.poisson(spec.mean_map_count, size=int(zero.sum()))
    reduces = rng.poisson(spec.mean_reduce_count, size=n_jobs)

    map_sizes = rng.exponential(spec.mean_map_size, size=int(maps.sum()))
    reduce_sizes = rng.exponential(spec.mean_reduce_size, size=int(reduces.sum()))
    map_cuts = np.cumsum(maps)[:-1]
    reduce_cuts = np.cumsum(reduces)[:-1]
    jobs = [
        JobSpec(float(a), tuple(ms.tolist()), tuple(rs.tolist()))
        for a, ms, rs in zip(arrivals, np.split(map_sizes, map_cuts), np.split(reduce_sizes, reduce_cuts))
    ]
    return Workload(tuple(jobs))


def equalize_reduce_counts(workload: Workload) -> Workload:
    """Pad every job with zero-size reduce tasks up to the largest reduce count."""
    if not workload.jobs:
        return workload
    r_max = max(workload.reduce_counts)
    return Workload(tuple(
        JobSpec(j.arrival, j.map_sizes, j.reduce_sizes + (0.0,) * (r_max - len(j.reduce_sizes)))
        for j in workload.jobs
    ))


def to_dict(workload: Workload) -> dict:
    return {"jobs": [
        {"arrival": j.arrival, "map_sizes": list(j.map_sizes), "reduce_sizes": list(j.reduce_sizes)}
        for j in workload.jobs
    ]}


def from_dict(data: dict) -> Workload:
    if not isinstance(data, dict) or not isinstance(data.get("jobs"), list):
        raise TraceFormatError("trace must be an object with a 'jobs' list")
    jobs = []
    for i, entry in enumerate(data["jobs"]):
        if not isinstance(entry, dict):
            raise TraceFormatError(f"jobs[{i}]: expected an object")
        try:
            arrival = _number(entry, "arrival", i)
            maps = _numbers(entry, "map_sizes", i)
            reduces = _numbers(entry, "reduce_sizes", i)
            jobs.append(JobSpec(arrival, maps, reduces))
        except ModelError as exc:
            raise TraceFormatError(f"jobs[{i}]: {exc}") from None
    return Workload(tuple(jobs))


def _number(entry: dict, key: str, i: int) -> float:
    if key not in entry:
        raise TraceFormatError(f"jobs[{i}].{key}: missing")
    value = entry[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise TraceFormatError(f"jobs[{i}].{key}: not a finite number: {value!r}")
    return float(value)


def _numbers(entry: dict, key: str, i: int) -> tuple[float, ...]:
    values = entry.get(key, [])
    if not isinstance(values, list):
        raise TraceFormatError(f"jobs[{i}].{key}: expected a list")
    out = []
    for k, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise TraceFormatError(f"jobs[{i}].{key}[{k}]: not a finite number: {v!r}")
        if v < 0:
            raise TraceFormatError(f"jobs[{i}].{key}[{k}]: negative size {v!r}")
        out.append(float(v))
    return tuple(out)


def save_trace(workload: Workload, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(workload), indent=1) + "\n")


def load_trace(path: str | Path) -> Workload:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return from_dict(data)
