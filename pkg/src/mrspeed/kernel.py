"""Fast cost evaluation for the SRPT-family policies.

The compiled core (``mrspeed._ckernel``) is used when it was built; otherwise
the engine itself computes the costs. Set ``MRSPEED_PURE_PYTHON=1`` to force
the fallback.
"""

from __future__ import annotations

import os
from typing import NamedTuple

import numpy as np

from .engine import run
from .metrics import compute
from .model import Workload
from .policies import Policy
from .power import PowerFunction

try:
    if os.environ.get("MRSPEED_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from . import _ckernel
except ImportError:
    _ckernel = None

BACKEND = "cython" if _ckernel is not None else "python"

# name -> (rule code, relaxed)
KERNEL_POLICIES = {
    "job_srpt": (0, False),
    "task_srpt": (1, False),
    "baseline_job": (0, True),
    "baseline_task": (1, True),
}


class Costs(NamedTuple):
    F_job: float
    F_task: float
    energy: float

    def cost(self, mode: str) -> float:
        return {"job": self.F_job, "task": self.F_task}[mode] + self.energy

    def flow(self, mode: str) -> float:
        return {"job": self.F_job, "task": self.F_task}[mode]


def _arrays(workload: Workload) -> tuple:
    jobs = workload.jobs
    ntasks = np.array([len(j.map_sizes) + len(j.reduce_sizes) for j in jobs], dtype=np.int64)
    first = np.concatenate(([0], np.cumsum(ntasks)[:-1])).astype(np.int64) if len(jobs) else ntasks
    task_job = np.repeat(np.arange(len(jobs), dtype=np.int64), ntasks)
    is_map = np.concatenate([[1] * len(j.map_sizes) + [0] * len(j.reduce_sizes) for j in jobs] or [[]])
    sizes = np.concatenate([list(j.map_sizes + j.reduce_sizes) for j in jobs] or [[]])
    return (
        np.array([j.arrival for j in jobs], dtype=np.float64),
        np.array([len(j.reduce_sizes) for j in jobs], dtype=np.int64),
        first, ntasks, task_job,
        np.ascontiguousarray(is_map, dtype=np.int8),
        np.ascontiguousarray(sizes, dtype=np.float64),
    )


def simulate_costs(workload: Workload, policy: Policy, K: int, power: PowerFunction,
                   backend: str | None = None) -> Costs:
    """Flow times and energy of ``policy`` on ``workload`` without keeping a trajectory.

    Policies outside the SRPT family always go through the engine.
    """
    backend = backend or BACKEND
    if backend not in ("cython", "python"):
        raise ValueError(f"backend must be 'cython' or 'python', got {backend!r}")
    if backend == "cython" and _ckernel is None:
        raise RuntimeError("the compiled kernel is not available")
    if backend == "cython" and policy.name in KERNEL_POLICIES:
        policy.check_servers(K)
        rule, relaxed = KERNEL_POLICIES[policy.name]
        out = _ckernel.simulate(*_arrays(workload), rule, relaxed, K, power.alpha, power.coefficient,
                                policy.speed_multiplier, policy.idle_speed_rule == "p1")
        return Costs(*out)
    report = compute(run(workload, policy, K, power, record_states=False), power)
    return Costs(report.F_job, report.F_task, report.energy)
