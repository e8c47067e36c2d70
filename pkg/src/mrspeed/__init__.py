"""Speed scaling on parallel servers with MapReduce precedence constraints."""

from .model import JobSpec, Kind, SystemState, Workload
from .power import PowerFunction
from .policies import Policy, ScheduleDecision, speed_multiplier_wrap
from .engine import Trajectory, run, snapshot_at
from .metrics import MetricsReport, compute, opt_lower_bound, oracle_single_task_cost

__version__ = "0.1.0"

__all__ = [
    "JobSpec", "Kind", "SystemState", "Workload", "PowerFunction", "Policy", "ScheduleDecision",
    "speed_multiplier_wrap", "Trajectory", "run", "snapshot_at", "MetricsReport", "compute",
    "opt_lower_bound", "oracle_single_task_cost",
]
