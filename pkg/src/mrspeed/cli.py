"""Experiment driver: generate workloads, run policies, measure, diagnose, write tables.

Examples::

    mrspeed --preset fig1 --iterations 200 --output out/fig1.csv
    mrspeed --policy task_srpt --baseline baseline_task --mode task --lambda 0.5 1.0
    mrspeed --policy job_srpt --baseline task_srpt --slots 3 --lambda 1 --diagnostics --output d.csv
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .engine import InvariantViolation, run
from .kernel import simulate_costs
from .metrics import opt_lower_bound
from .model import ModelError, Workload, beta_of_instance
from .policies import IDLE_RULES, POLICY_NAMES, ConfigurationError, Policy
from .potential import (POLICY_VARIANT, PhiFn, PotentialConfig, PotentialError, boundary_check,
                        jump_audit, master_check, phi_eval, phi_series, theorem_ratio)
from .power import PowerFunction
from .workload import TraceFormatError, WorkloadSpec, equalize_reduce_counts, generate, load_trace, stream

RESULT_COLUMNS = ("iteration", "lambda", "policy", "C", "flow", "energy", "LB", "mean_map_size")
AGGREGATE_COLUMNS = ("lambda", "mean_map_size", "policy", "iterations", "mean_C", "sem_C",
                     "mean_flow", "mean_energy", "mean_LB", "ratio_to_comparison")

_LAMBDAS = (0.5, 1.0, 1.5, 2.0, 2.5)
PRESETS: dict[str, dict] = {
    "fig1": dict(mode="job", policy="job_srpt", comparison_policy="baseline_job", K=5, alpha=2.5,
                 lambdas=_LAMBDAS, slots=1000),
    "fig2": dict(mode="task", policy="task_srpt", comparison_policy="baseline_task", K=5, alpha=2.5,
                 lambdas=_LAMBDAS, slots=1000),
    "fig3": dict(mode="task", policy="task_srpt", comparison_policy="baseline_task", K=5, alpha=2.5,
                 lambdas=(0.5,), slots=1000, mean_map_count=2.0, mean_reduce_count=5.0,
                 mean_reduce_size=1.0, mean_map_sizes=(2.0, 4.0, 6.0, 8.0)),
}


@dataclass(frozen=True)
class ExperimentConfig:
    policy: str = "job_srpt"
    comparison_policy: str | None = None
    comparison_speedup: float = 1.0
    K: int = 5
    alpha: float = 2.5
    power_coefficient: float = 1.0
    lambdas: tuple[float, ...] = (0.5,)
    mean_map_sizes: tuple[float, ...] = (3.0,)
    mean_map_count: float = 2.0
    mean_reduce_count: float = 2.0
    mean_reduce_size: float = 5.0
    slots: int = 1000
    iterations: int = 100
    seed: int = 0
    trace: str | None = None
    output: str | None = None
    diagnostics: bool = False
    ratio: float | None = None
    idle_speed_rule: str = "zero"
    mode: str = "job"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.mode not in ("job", "task"):
            raise ConfigurationError(f"mode must be 'job' or 'task', got {self.mode!r}")
        if not self.lambdas or not self.mean_map_sizes:
            raise ConfigurationError("need at least one lambda and one mean map size")
        if self.diagnostics and self.comparison_policy is None:
            raise ConfigurationError("diagnostics need a comparison policy (--baseline)")
        if self.diagnostics and self.policy not in POLICY_VARIANT:
            raise ConfigurationError(f"no potential is defined for {self.policy}")
        for p in self.policies:
            p.check_servers(self.K)
        self.power  # validates alpha and the coefficient
        if self.trace is None:
            self.specs()

    @property
    def power(self) -> PowerFunction:
        try:
            return PowerFunction(self.alpha, self.power_coefficient)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    @property
    def policies(self) -> list[Policy]:
        out = [Policy(self.policy, idle_speed_rule=self.idle_speed_rule)]
        if self.comparison_policy is not None:
            out.append(Policy(self.comparison_policy, self.comparison_speedup, self.idle_speed_rule))
        return out

    def specs(self) -> list[WorkloadSpec]:
        """Sweep points in output order: lambda outer, mean map size inner."""
        try:
            return [WorkloadSpec(lam, self.slots, self.mean_map_count, self.mean_reduce_count, mu,
                                 self.mean_reduce_size, self.seed)
                    for lam in self.lambdas for mu in self.mean_map_sizes]
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None


def _label(policy: Policy) -> str:
    return policy.name if policy.speed_multiplier == 1.0 else f"{policy.name}x{policy.speed_multiplier:g}"


def _realize(config: ExperimentConfig, point: int, iteration: int) -> Workload:
    if config.trace is not None:
        workload = load_trace(config.trace)
    else:
        workload = generate(config.specs()[point], stream(config.seed, point, iteration))
    if any(p.requires_equalized for p in config.policies):
        workload = equalize_reduce_counts(workload)
    return workload


def _points(config: ExperimentConfig) -> list[tuple[int, str, str]]:
    if config.trace is not None:
        return [(0, "", "")]
    return [(i, repr(s.lam), repr(s.mean_map_size)) for i, s in enumerate(config.specs())]


def _iteration_rows(config: ExperimentConfig, point: int, lam: str, mu: str, iteration: int) -> list[dict]:
    workload = _realize(config, point, iteration)
    power = config.power
    lb = opt_lower_bound(workload, power, config.mode)
    rows = []
    for policy in config.policies:
        costs = simulate_costs(workload, policy, config.K, power)
        rows.append({
            "iteration": iteration, "lambda": lam, "policy": _label(policy),
            "C": costs.cost(config.mode), "flow": costs.flow(config.mode), "energy": costs.energy,
            "LB": lb, "mean_map_size": mu,
        })
    return rows


def _jobs(config: ExperimentConfig) -> list[tuple]:
    its = 1 if config.trace is not None else config.iterations
    return [(config, p, lam, mu, it) for p, lam, mu in _points(config) for it in range(its)]


def _star(fn, args):
    return fn(*args)


def _map(config: ExperimentConfig, fn, jobs: list[tuple]) -> list:
    if config.workers == 1 or len(jobs) == 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(config.workers) as pool:
        return list(pool.map(_star, [fn] * len(jobs), jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """One row per (sweep point, iteration, policy); rows ordered by point then iteration."""
    return [row for rows in _map(config, _iteration_rows, _jobs(config)) for row in rows]


def aggregate(rows: Sequence[dict], config: ExperimentConfig) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["lambda"], row["mean_map_size"], row["policy"]), []).append(row)
    labels = [_label(p) for p in config.policies]
    out = []
    for (lam, mu, label), rs in groups.items():
        c = np.array([r["C"] for r in rs])
        out.append({
            "lambda": lam, "mean_map_size": mu, "policy": label, "iterations": len(rs),
            "mean_C": float(c.mean()), "sem_C": float(c.std(ddof=1) / math.sqrt(len(c))) if len(c) > 1 else 0.0,
            "mean_flow": float(np.mean([r["flow"] for r in rs])),
            "mean_energy": float(np.mean([r["energy"] for r in rs])),
            "mean_LB": float(np.mean([r["LB"] for r in rs])),
            "ratio_to_comparison": "",
        })
    if len(labels) == 2:
        by_key = {(a["lambda"], a["mean_map_size"], a["policy"]): a for a in out}
        for a in out:
            if a["policy"] == labels[0]:
                ref = by_key[(a["lambda"], a["mean_map_size"], labels[1])]["mean_C"]
                a["ratio_to_comparison"] = a["mean_C"] / ref if ref > 0 else ""
    return out


# Diagnostics ------------------------------------------------------------------------

def _diagnose_one(config: ExperimentConfig, point: int, lam: str, mu: str, iteration: int,
                  phi: PhiFn = phi_eval) -> dict:
    workload = _realize(config, point, iteration)
    power = config.power
    variant = POLICY_VARIANT[config.policy]
    try:
        beta = beta_of_instance(workload)
    except ModelError:
        beta = 1.0
    pcfg = PotentialConfig.default(variant, power, config.K, beta=beta)
    ratio = config.ratio if config.ratio is not None else theorem_ratio(variant, power, config.K, beta)
    pol_a, pol_c = config.policies
    traj_a = run(workload, pol_a, config.K, power)
    traj_c = run(workload, pol_c, config.K, power)
    series = phi_series(traj_a, traj_c, pcfg, power, phi)
    boundary = boundary_check(series)
    ledger = jump_audit(traj_a, traj_c, pcfg, power, series)
    verdict = master_check(traj_a, traj_c, ratio, pcfg, power, config.mode, series)
    return {
        "lambda": lam, "mean_map_size": mu, "iteration": iteration, "jobs": len(workload),
        "beta": beta, "ratio": ratio,
        "boundary": dataclasses.asdict(boundary),
        "jumps": ledger.to_dict(),
        "master": verdict.to_dict(),
        "phi_series": [[p.time, p.before, p.after] for p in series],
    }


def run_diagnostics(config: ExperimentConfig, phi: PhiFn = phi_eval) -> dict:
    """Potential series, jump ledgers and drift checks for every realization."""
    if config.comparison_policy is None:
        raise ConfigurationError("diagnostics need a comparison policy")
    jobs = _jobs(config)
    if phi is phi_eval:
        instances = _map(config, _diagnose_one, jobs)
    else:
        instances = [_diagnose_one(*j, phi=phi) for j in jobs]
    informative = not config.policies[1].respects_precedence
    boundary_fail = [i for i in instances if not i["boundary"]["passed"]]
    budget_fail = [i for i in instances if not i["jumps"]["within_budget"]]
    master_fail = [i for i in instances if not i["master"]["passed"]]
    hard_fail = bool(boundary_fail or budget_fail or (master_fail and not informative))
    first = (boundary_fail or budget_fail or master_fail or [None])[0]
    return {
        "policy": config.policy,
        "comparison": _label(config.policies[1]),
        "variant": POLICY_VARIANT[config.policy],
        "mode": config.mode, "K": config.K, "alpha": config.alpha,
        "summary": {
            "instances": len(instances),
            "boundary_failures": len(boundary_fail),
            "jump_budget_exceeded": len(budget_fail),
            "master_failures": len(master_fail),
            "informative_only": informative,
            "verdict": "FAIL" if hard_fail else ("INFORMATIVE" if informative else "PASS"),
            "first_offending": None if first is None else {
                "lambda": first["lambda"], "iteration": first["iteration"],
                "boundary_time": first["boundary"]["first_offending_time"],
                "interval": first["master"]["first_violation"],
            },
        },
        "instances": instances,
    }


# Output ------------------------------------------------------------------------------

def sibling(path: str | Path, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + suffix)


def write_csv(path: str | Path, rows: Sequence[dict], columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        out.writeheader()
        for row in rows:
            out.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _print_table(rows: Sequence[dict]) -> None:
    print(f"{'lambda':>8} {'mu_m':>6} {'policy':<22} {'mean_C':>14} {'ratio':>8}")
    for a in rows:
        ratio = f"{a['ratio_to_comparison']:.4f}" if a["ratio_to_comparison"] != "" else ""
        print(f"{a['lambda']:>8} {a['mean_map_size']:>6} {a['policy']:<22} {a['mean_C']:>14.6g} {ratio:>8}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mrspeed", description=__doc__.splitlines()[0])
    p.add_argument("--preset", choices=sorted(PRESETS), help="figure parameter set; explicit flags override it")
    p.add_argument("--policy", choices=POLICY_NAMES)
    p.add_argument("--baseline", choices=POLICY_NAMES, help="comparison policy run on the same realizations")
    p.add_argument("--comparison-speedup", type=float, help="multiply every rate of the comparison policy")
    p.add_argument("--servers", "-K", type=int, dest="K")
    p.add_argument("--alpha", type=float)
    p.add_argument("--power-coefficient", type=float)
    p.add_argument("--lambda", type=float, nargs="+", dest="lambdas", metavar="LAMBDA")
    p.add_argument("--map-size", type=float, nargs="+", dest="mean_map_sizes", metavar="MEAN")
    p.add_argument("--reduce-size", type=float, dest="mean_reduce_size", metavar="MEAN")
    p.add_argument("--map-count", type=float, dest="mean_map_count", metavar="MEAN")
    p.add_argument("--reduce-count", type=float, dest="mean_reduce_count", metavar="MEAN")
    p.add_argument("--slots", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--trace", metavar="PATH", help="JSON trace used instead of generated workloads")
    p.add_argument("--mode", choices=("job", "task"))
    p.add_argument("--output", metavar="PATH", help="results CSV; aggregate and diagnostics files sit beside it")
    p.add_argument("--diagnostics", action="store_true", default=None)
    p.add_argument("--ratio", type=float, help="constant c of the drift check (default: theorem value)")
    p.add_argument("--idle-speed-rule", choices=IDLE_RULES)
    p.add_argument("--workers", type=int)
    return p


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    values = dict(PRESETS[ns.preset]) if ns.preset else {}
    if ns.baseline is not None:
        values["comparison_policy"] = ns.baseline
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(ns, f.name, None)
        if v is not None:
            values[f.name] = tuple(v) if isinstance(v, list) else v
    return ExperimentConfig(**values)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        config = config_from_args(ns)
    except (ConfigurationError, PotentialError) as exc:
        print(f"mrspeed: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        rows = run_experiment(config)
        agg = aggregate(rows, config)
        report = run_diagnostics(config) if config.diagnostics else None
        if config.output:
            Path(config.output).parent.mkdir(parents=True, exist_ok=True)
            write_csv(config.output, rows, RESULT_COLUMNS)
            write_csv(sibling(config.output, ".aggregate.csv"), agg, AGGREGATE_COLUMNS)
            if report is not None:
                sibling(config.output, ".diagnostics.json").write_text(json.dumps(report, indent=1) + "\n")
        _print_table(agg)
        if report is not None:
            print("diagnostics:", json.dumps(report["summary"]))
    except (ConfigurationError, PotentialError, TraceFormatError) as exc:
        print(f"mrspeed: configuration error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"mrspeed: invariant violation: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"mrspeed: I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
