"""Flow time, energy and the derived costs, computed exactly from a trajectory."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .engine import InvariantViolation, Trajectory
from .model import Workload
from .power import PowerDomainError, PowerFunction

# Relative agreement demanded of the two flow-time computations.
FLOW_RTOL = 1e-9

REPORT_FIELDS = ("F_job", "F_task", "energy", "C_job", "C_task", "LB_job", "LB_task")


@dataclass
class MetricsReport:
    F_job: float
    F_task: float
    energy: float
    C_job: float
    C_task: float
    LB_job: float
    LB_task: float
    F_job_integral: float = 0.0
    F_task_integral: float = 0.0
    job_flow_times: dict[int, float] = field(default_factory=dict)

    def cost(self, mode: str) -> float:
        return {"job": self.C_job, "task": self.C_task}[mode]

    def flow(self, mode: str) -> float:
        return {"job": self.F_job, "task": self.F_task}[mode]

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in REPORT_FIELDS}

    def to_json(self, path: str | Path) -> None:
        data = self.to_dict()
        data["job_flow_times"] = {str(k): v for k, v in self.job_flow_times.items()}
        Path(path).write_text(json.dumps(data, indent=1) + "\n")

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
            out.writeheader()
            out.writerow(self.to_dict())


class IncompleteTrajectoryError(ValueError):
    pass


def _agree(a: float, b: float) -> bool:
    return abs(a - b) <= FLOW_RTOL * max(abs(a), abs(b), 1.0)


def compute(traj: Trajectory, power: PowerFunction | None = None) -> MetricsReport:
    power = power or traj.power
    if not traj.complete:
        raise IncompleteTrajectoryError("every task must be finished before measuring")

    energy = math.fsum(power(s) * iv.length for iv in traj.intervals for s in iv.decision.speeds if s > 0)
    job_flows = {j.job_id: j.flow_time for j in traj.jobs}
    F_job = math.fsum(job_flows.values())
    F_task = math.fsum(t.completion_time - j.arrival for j in traj.jobs for t in j.tasks if t.size > 0)
    F_job_int = math.fsum(iv.counts["n_jobs"] * iv.length for iv in traj.intervals)
    F_task_int = math.fsum((iv.counts["n_f"] + iv.counts["n_c"]) * iv.length for iv in traj.intervals)
    if not (_agree(F_job, F_job_int) and _agree(F_task, F_task_int)):
        raise InvariantViolation(
            f"flow time mismatch: job {F_job!r} vs {F_job_int!r}, task {F_task!r} vs {F_task_int!r}")

    lb = opt_lower_bound(traj.workload, power)
    return MetricsReport(
        F_job=F_job, F_task=F_task, energy=energy,
        C_job=F_job + energy, C_task=F_task + energy,
        LB_job=lb, LB_task=lb,
        F_job_integral=F_job_int, F_task_integral=F_task_int,
        job_flow_times=job_flows,
    )


def opt_lower_bound(workload: Workload, power: PowerFunction, mode: str = "job") -> float:
    """P'(s*) times the total work; a lower bound on any schedule's cost in either mode."""
    if mode not in ("job", "task"):
        raise ValueError(f"mode must be 'job' or 'task', got {mode!r}")
    return power.derivative(power.s_star()) * workload.total_work


def oracle_single_task_cost(sizes: Sequence[float], weights: Sequence[float],
                            power: PowerFunction) -> float:
    """Cheapest cost of running tasks back to back, each at its own constant speed.

    A task of size ``w`` whose completion is counted ``weight`` times in the
    flow integral costs ``min_s weight*w/s + (w/s) P(s)``; the minimiser solves
    ``weight + P(s) = s P'(s)``.
    """
    if len(sizes) != len(weights):
        raise ValueError("sizes and weights must have equal length")
    total = []
    for w, weight in zip(sizes, weights):
        if weight < 1:
            raise PowerDomainError(f"weight must be >= 1, got {weight}")
        if w == 0:
            continue
        s = power.balancing_speed(weight)
        total.append(w * (weight + power(s)) / s)
    return math.fsum(total)
