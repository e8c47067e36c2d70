"""Potential functions over a pair of schedules, jump ledgers and drift checks.

Every potential here is a sum of integrals over ``q`` of functions of step
profiles such as ``n(q)`` (how many items have remaining size at least q).
Between consecutive breakpoints those profiles are constant, so each
integral is evaluated exactly as a finite sum over breakpoint gaps.

Two schedules are compared: ``A`` (the algorithm under study) and ``C`` (a
comparison schedule on the same workload, standing in for OPT).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .engine import Trajectory, snapshot_at
from .metrics import compute
from .model import SystemState
from .power import PowerFunction

VARIANTS = ("job", "task", "single", "multi")


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialConfig:
    """Coefficients of one potential variant.

    For ``multi``, ``c1``/``c2``/``c3`` weight the ``f``-terms of the map,
    job and reduce profiles, ``c12``/``c32`` the linear map/reduce terms and
    ``c4`` the per-job map-work term.
    """

    variant: str
    K: int = 1
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0
    c12: float = 0.0
    c32: float = 0.0
    beta: float | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise PotentialError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.K < 1:
            raise PotentialError("K must be >= 1")
        for name in ("c1", "c2", "c3", "c4", "c12", "c32"):
            if getattr(self, name) < 0:
                raise PotentialError(f"{name} must be >= 0")
        if self.variant == "single" and self.K != 1:
            raise PotentialError("the single-server potential needs K=1")

    @classmethod
    def default(cls, variant: str, power: PowerFunction, K: int = 1,
                beta: float | None = None) -> "PotentialConfig":
        """Coefficients used in the competitive-ratio arguments."""
        if variant == "job":
            return cls("job", K, c1=2.0, c2=2.0 / power.inverse(1.0))
        if variant == "task":
            if beta is None:
                raise PotentialError("the task potential needs beta")
            return cls("task", K, c1=2.0 * beta, c2=2.0, c3=2.0, beta=beta)
        if variant in ("single", "multi"):
            if not power.alpha < 2:
                raise PotentialError("the triple-lane potentials are defined for alpha < 2")
            c2 = 4.0 / (2.0 - power.alpha)
            if variant == "single":
                return cls("single", 1, c1=4.0, c2=c2, c3=4.0)
            return cls("multi", K, c1=4.0, c2=c2, c3=4.0, c4=1.0, c12=1.0, c32=1.0)
        raise PotentialError(f"unknown variant {variant!r}")


# f and g ------------------------------------------------------------------------

_TABLES: dict[tuple[float, PowerFunction], np.ndarray] = {}


def _cumdelta(step: float, power: PowerFunction, upto: int) -> np.ndarray:
    """Array whose i-th entry is sum_{j=1..i} Delta(step * j), for i <= upto at least."""
    key = (step, power)
    table = _TABLES.get(key)
    if table is None or len(table) <= upto:
        size = max(upto + 1, 64, 2 * (len(table) if table is not None else 0))
        x = step * np.arange(1, size)
        deltas = power.coefficient * power.alpha * (x / power.coefficient) ** (1.0 - 1.0 / power.alpha)
        table = np.concatenate(([0.0], np.cumsum(deltas)))
        _TABLES[key] = table
    return table


def f_eval(i: int, K: int, power: PowerFunction) -> float:
    """f(i/K) = sum_{j=1..i} Delta(j/K), with f(0) = 0."""
    if i < 0 or K < 1:
        raise PotentialError("need i >= 0 and K >= 1")
    return float(_cumdelta(1.0 / K, power, i)[i])


def g_eval(a: float, i: int, power: PowerFunction) -> float:
    """g_a(a*i) = sum_{j=1..i} Delta(a*j), with g_a(0) = 0."""
    if not a > 0 or i < 0:
        raise PotentialError("need a > 0 and i >= 0")
    return float(_cumdelta(float(a), power, i)[i])


# Step profiles ----------------------------------------------------------------------

@dataclass(frozen=True)
class DProfile:
    """Signed count difference ``n_A(q) - n_C(q)`` as a step function of q.

    ``diff[i]`` holds on ``(breakpoints[i], breakpoints[i+1]]``; beyond the
    last breakpoint both counts are zero. ``d`` is the clipped version.
    """

    breakpoints: np.ndarray
    diff: np.ndarray

    @classmethod
    def between(cls, a_values: Iterable[float], c_values: Iterable[float], scale: float = 1.0) -> "DProfile":
        a = np.sort(np.asarray([v for v in a_values if v > 0], dtype=float)) * scale
        c = np.sort(np.asarray([v for v in c_values if v > 0], dtype=float)) * scale
        bp = np.unique(np.concatenate(([0.0], a, c)))
        upper = bp[1:]
        n_a = len(a) - np.searchsorted(a, upper, side="left")
        n_c = len(c) - np.searchsorted(c, upper, side="left")
        return cls(bp, (n_a - n_c).astype(np.int64))

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def d(self) -> np.ndarray:
        return np.maximum(self.diff, 0)

    def integral_of_f(self, K: int, power: PowerFunction, multiplier: int = 1) -> float:
        """Integral over q of f(multiplier * d(q) / K)."""
        if len(self.diff) == 0:
            return 0.0
        idx = multiplier * self.d
        table = _cumdelta(1.0 / K, power, int(idx.max()))
        return math.fsum(table[idx] * self.gaps)


# Per-state ingredients -----------------------------------------------------------------

def _remaining(state: SystemState, kind: str | None = None) -> list[float]:
    if kind is None:
        return [t.remaining for t in state.tasks]
    want_map = kind == "map"
    return [t.remaining for t in state.tasks if t.is_map == want_map]


def _job_work(state: SystemState, maps_only: bool = False) -> list[float]:
    out: dict[int, float] = {}
    for t in state.tasks:
        if maps_only and not t.is_map:
            continue
        out[t.job_id] = out.get(t.job_id, 0.0) + t.remaining
    return list(out.values())


def _caged_map_term(state: SystemState, K: int, power: PowerFunction) -> float:
    """sum over map tasks of remaining * Delta(z), z = (load + b_hat) / b_hat."""
    terms = []
    for t in state.tasks:
        if t.is_map and t.remaining > 0:
            b_hat = min(state.map_counts[t.job_id], K)
            z = (state.reduce_counts[t.job_id] + 1 + b_hat) / b_hat
            terms.append(t.remaining * g_eval(z, 1, power))
    return math.fsum(terms)


def _reduce_count(*states: SystemState) -> int:
    counts = {s.reduce_counts[t.job_id] for s in states for t in s.tasks if t.is_map}
    if len(counts) > 1:
        raise PotentialError("triple-lane potentials need equalized reduce counts")
    return counts.pop() if counts else 0


def phi_components(a: SystemState, c: SystemState, config: PotentialConfig,
                   power: PowerFunction) -> dict[str, float]:
    if not math.isclose(a.time, c.time, rel_tol=1e-12, abs_tol=1e-12):
        raise PotentialError(f"states at different times: {a.time} vs {c.time}")
    K, v = config.K, config.variant
    if v == "job":
        wa, wc = _job_work(a), _job_work(c)
        return {
            "phi1": config.c1 * DProfile.between(wa, wc).integral_of_f(K, power),
            "phi2": config.c2 * (math.fsum(wa) - math.fsum(wc)),
        }
    if v == "task":
        if config.beta is None or not config.beta > 0:
            raise PotentialError("the task potential needs a positive beta")
        ra, rc = _remaining(a), _remaining(c)
        return {
            "phi1": config.c1 * DProfile.between(ra, rc, scale=config.beta).integral_of_f(K, power),
            "phi2": config.c2 * (math.fsum(ra) - math.fsum(rc)),
            "phi3": config.c3 * (_caged_map_term(a, K, power) - _caged_map_term(c, K, power)),
        }
    # single / multi
    r = _reduce_count(a, c)
    ma, mc = _remaining(a, "map"), _remaining(c, "map")
    qa, qc = _job_work(a, maps_only=True), _job_work(c, maps_only=True)
    xa, xc = _remaining(a, "reduce"), _remaining(c, "reduce")
    out = {
        "phi1": config.c1 * DProfile.between(ma, mc).integral_of_f(K, power),
        "phi2": config.c2 * DProfile.between(qa, qc).integral_of_f(K, power, multiplier=r),
        "phi3": config.c3 * DProfile.between(xa, xc).integral_of_f(K, power),
    }
    if v == "multi":
        out["phi1"] += config.c12 * (math.fsum(ma) - math.fsum(mc))
        out["phi3"] += config.c32 * (math.fsum(xa) - math.fsum(xc))
        out["phi4"] = config.c4 * f_eval(r * K, K, power) * (math.fsum(qa) - math.fsum(qc))
    return out


def phi_eval(a: SystemState, c: SystemState, config: PotentialConfig, power: PowerFunction) -> float:
    return math.fsum(phi_components(a, c, config, power).values())


PhiFn = Callable[[SystemState, SystemState, PotentialConfig, PowerFunction], float]


# Along a pair of trajectories --------------------------------------------------------------

def _state(traj: Trajectory, t: float, side: str) -> SystemState:
    if not traj.intervals or t < traj.start or t > traj.end:
        counts = {j: len(spec.reduce_sizes) for j, spec in enumerate(traj.workload.jobs)}
        return SystemState(t, (), counts)
    return snapshot_at(traj, t, side)


@dataclass(frozen=True)
class PhiPoint:
    time: float
    before: float
    after: float

    @property
    def jump(self) -> float:
        return self.after - self.before


def _check_pair(a: Trajectory, c: Trajectory) -> None:
    if a.workload != c.workload:
        raise PotentialError("trajectories were produced from different workloads")


def phi_series(a: Trajectory, c: Trajectory, config: PotentialConfig, power: PowerFunction,
               phi: PhiFn = phi_eval) -> list[PhiPoint]:
    """Potential just before and just after every event of either trajectory."""
    _check_pair(a, c)
    times = sorted(set(a.event_times()) | set(c.event_times()))
    return [
        PhiPoint(t, phi(_state(a, t, "left"), _state(c, t, "left"), config, power),
                 phi(_state(a, t, "right"), _state(c, t, "right"), config, power))
        for t in times
    ]


def _tol(*values: float) -> float:
    return 1e-9 * max([1.0, *(abs(v) for v in values)])


@dataclass
class JumpLedger:
    jumps: list[PhiPoint]
    positive_total: float
    budget: float

    @property
    def within_budget(self) -> bool:
        slack = _tol(*(p.after for p in self.jumps)) * max(1, len(self.jumps))
        return self.positive_total <= self.budget + slack

    def to_dict(self) -> dict:
        return {
            "positive_total": self.positive_total,
            "budget": self.budget,
            "within_budget": self.within_budget,
            "jumps": [dict(asdict(p), jump=p.jump) for p in self.jumps],
        }


def jump_budget(a: Trajectory, config: PotentialConfig, power: PowerFunction) -> float:
    """Analytic allowance for upward jumps of the potential on this workload.

    ``job``: the task-deletion allowance over the K-1 largest jobs;
    ``task``: per job, c3 * w_max * sum_{b=1..K} b * Delta((load + b) / b);
    ``single``/``multi``: 0, since these potentials are continuous in time.
    """
    jobs = a.workload.jobs
    K = config.K
    if config.variant == "job":
        sizes = sorted((j.work for j in jobs), reverse=True)[:K - 1]
        return math.fsum((config.c1 * power.delta(len(jobs) / K) + config.c2) * w for w in sizes)
    if config.variant == "task":
        w_max = max((x for j in jobs for x in j.map_sizes + j.reduce_sizes), default=0.0)
        per_job = [
            math.fsum(b * power.delta((len(j.reduce_sizes) + 1 + b) / b) for b in range(1, K + 1))
            for j in jobs
        ]
        return config.c3 * w_max * math.fsum(per_job)
    return 0.0


def jump_audit(a: Trajectory, c: Trajectory, config: PotentialConfig, power: PowerFunction,
               series: list[PhiPoint] | None = None) -> JumpLedger:
    if series is None:
        series = phi_series(a, c, config, power)
    positive = [p for p in series if p.jump > _tol(p.before, p.after)]
    return JumpLedger(positive, math.fsum(p.jump for p in positive), jump_budget(a, config, power))


@dataclass
class BoundaryVerdict:
    passed: bool
    first_offending_time: float | None = None
    value: float | None = None


def boundary_check(series: list[PhiPoint]) -> BoundaryVerdict:
    """The potential must vanish before the first and after the last event."""
    if not series:
        return BoundaryVerdict(True)
    first, last = series[0], series[-1]
    if abs(first.before) > _tol(first.after):
        return BoundaryVerdict(False, first.time, first.before)
    if abs(last.after) > _tol(last.before):
        return BoundaryVerdict(False, last.time, last.after)
    return BoundaryVerdict(True)


@dataclass
class MasterVerdict:
    passed: bool
    cost_a: float
    cost_c: float
    c: float
    jump_total: float
    informative_only: bool
    interval_violations: int = 0
    first_violation: tuple[float, float] | None = None
    slack: float = field(default=0.0)

    def to_dict(self) -> dict:
        return asdict(self)


def _running_costs(traj: Trajectory, times: list[float], mode: str, power: PowerFunction) -> list[float]:
    """Integral of (count + total power) over each gap between consecutive ``times``."""
    key = "n_jobs" if mode == "job" else None
    out = []
    ivs = traj.intervals
    i = 0
    for t0, t1 in zip(times, times[1:]):
        while i < len(ivs) and ivs[i].t_end <= t0:
            i += 1
        if i == len(ivs) or ivs[i].t_start >= t1:
            out.append(0.0)
            continue
        iv = ivs[i]
        count = iv.counts[key] if key else iv.counts["n_f"] + iv.counts["n_c"]
        out.append((count + math.fsum(power(s) for s in iv.decision.speeds)) * (t1 - t0))
    return out


def master_check(a: Trajectory, c: Trajectory, ratio: float, config: PotentialConfig,
                 power: PowerFunction, mode: str = "job",
                 series: list[PhiPoint] | None = None) -> MasterVerdict:
    """Integrated drift inequality: cost_A <= ratio * cost_C + upward jumps.

    Each gap between consecutive events is also checked on its own
    (potential change + A's running cost against ratio times C's running
    cost); those results are reported but do not decide the verdict. When
    C ignores precedence it is not a feasible schedule, and the verdict is
    flagged informative only.
    """
    if mode not in ("job", "task"):
        raise PotentialError(f"mode must be 'job' or 'task', got {mode!r}")
    _check_pair(a, c)
    if series is None:
        series = phi_series(a, c, config, power)
    ledger = jump_audit(a, c, config, power, series)
    cost_a = compute(a, power).cost(mode)
    cost_c = compute(c, power).cost(mode)
    slack = _tol(cost_a, ratio * cost_c)
    passed = cost_a <= ratio * cost_c + ledger.positive_total + slack

    times = [p.time for p in series]
    run_a = _running_costs(a, times, mode, power)
    run_c = _running_costs(c, times, mode, power)
    violations = 0
    first = None
    for k, (p0, p1) in enumerate(zip(series, series[1:])):
        lhs = (p1.before - p0.after) + run_a[k]
        rhs = ratio * run_c[k]
        if lhs > rhs + _tol(lhs, rhs, p0.after, p1.before):
            violations += 1
            if first is None:
                first = (p0.time, p1.time)
    return MasterVerdict(passed, cost_a, cost_c, ratio, ledger.positive_total,
                         not c.policy.respects_precedence, violations, first, slack)


def theorem_ratio(variant: str, power: PowerFunction, K: int = 1, beta: float | None = None) -> float:
    """Competitive-ratio constant the drift argument for ``variant`` delivers."""
    a = power.alpha
    if variant == "job":
        return 4.0 * (2.0 - 1.0 / K) ** a
    if variant == "task":
        if beta is None:
            raise PotentialError("the task ratio needs beta")
        return power(2.0 - 1.0 / K) * (2.0 * beta + 2.0 + 2.0 * (a - 1.0))
    if variant in ("single", "multi"):
        if not a < 2:
            raise PotentialError("the triple-lane ratio is defined for alpha < 2")
        return 8.0 + 4.0 / (2.0 - a) + 3.0 ** a
    raise PotentialError(f"unknown variant {variant!r}")


POLICY_VARIANT = {"job_srpt": "job", "task_srpt": "task", "triple_single": "single", "triple_multi": "multi"}
