import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrspeed import JobSpec, Policy, PowerFunction, Workload, compute, opt_lower_bound, run
from mrspeed.engine import InvariantViolation
from mrspeed.metrics import IncompleteTrajectoryError, oracle_single_task_cost
from mrspeed.power import PowerDomainError
from mrspeed.workload import WorkloadSpec, equalize_reduce_counts, generate, stream

from conftest import workloads

NAMES = ["job_srpt", "task_srpt", "triple_multi", "baseline_job", "baseline_task"]


@given(workloads(max_jobs=6), st.sampled_from(NAMES), st.integers(1, 4))
def test_flow_double_computation_and_cost_identity(w, name, K):
    w = equalize_reduce_counts(w)
    rep = compute(run(w, Policy(name), K, PowerFunction(2.5)))
    assert rep.F_job == pytest.approx(rep.F_job_integral, rel=1e-9, abs=1e-12)
    assert rep.F_task == pytest.approx(rep.F_task_integral, rel=1e-9, abs=1e-12)
    assert rep.C_job == rep.F_job + rep.energy
    assert rep.C_task == rep.F_task + rep.energy


def test_flow_agreement_on_100_generated_instances():
    for it in range(100):
        w = generate(WorkloadSpec(1.0, 6), stream(2, it))
        rep = compute(run(w, Policy(NAMES[it % 2]), 1 + it % 5, PowerFunction(2.5)))
        assert abs(rep.F_job - rep.F_job_integral) <= 1e-9 * max(1.0, rep.F_job)
        assert abs(rep.F_task - rep.F_task_integral) <= 1e-9 * max(1.0, rep.F_task)


@given(workloads(max_jobs=6), st.sampled_from(NAMES), st.integers(1, 4), st.sampled_from([1.5, 2.0, 2.5]))
def test_task_cost_dominates_lower_bound(w, name, K, alpha):
    p = PowerFunction(alpha)
    w = equalize_reduce_counts(w)
    rep = compute(run(w, Policy(name), K, p))
    assert rep.C_task >= opt_lower_bound(w, p, "task") * (1 - 1e-9)


@given(workloads(max_jobs=6), st.sampled_from(["job_srpt", "task_srpt", "triple_single", "baseline_job"]))
def test_job_cost_dominates_lower_bound_on_one_server(w, name):
    p = PowerFunction(2.0)
    w = equalize_reduce_counts(w)
    rep = compute(run(w, Policy(name), 1, p))
    assert rep.C_job >= opt_lower_bound(w, p, "job") * (1 - 1e-9)


def test_job_bound_fails_with_parallel_tasks_of_one_job():
    """Four unit maps of one job on four servers: one unit of flow, four of energy."""
    w = Workload((JobSpec(0.0, (1.0,) * 4),))
    p = PowerFunction(2.0)
    rep = compute(run(w, Policy("job_srpt"), 4, p))
    assert rep.C_job == pytest.approx(5.0)
    assert opt_lower_bound(w, p, "job") == pytest.approx(8.0)


def test_lower_bound_scale_covariance():
    w = generate(WorkloadSpec(1.0, 10, seed=3))
    doubled = Workload(tuple(JobSpec(j.arrival, tuple(2 * x for x in j.map_sizes),
                                     tuple(2 * x for x in j.reduce_sizes)) for j in w.jobs))
    p = PowerFunction(2.0)
    assert opt_lower_bound(doubled, p) == pytest.approx(2 * opt_lower_bound(w, p), rel=1e-12)
    with pytest.raises(ValueError):
        opt_lower_bound(w, p, "both")


def test_incomplete_and_inconsistent_trajectories():
    w = Workload((JobSpec(0.0, (1.0,), (1.0,)),))
    traj = run(w, Policy("job_srpt"), 1, PowerFunction(2.0))
    traj.jobs[0].reduce_tasks[0].completion_time = None
    with pytest.raises(IncompleteTrajectoryError):
        compute(traj)
    traj = run(w, Policy("job_srpt"), 1, PowerFunction(2.0))
    traj.jobs[0].reduce_tasks[0].completion_time += 1.0
    with pytest.raises(InvariantViolation):
        compute(traj)


def test_report_serialisation(tmp_path):
    rep = compute(run(Workload((JobSpec(0.0, (1.0,), (1.0,)),)), Policy("job_srpt"), 1, PowerFunction(2.0)))
    rep.to_json(tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert set(data) == {"F_job", "F_task", "energy", "C_job", "C_task", "LB_job", "LB_task", "job_flow_times"}
    rep.to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "F_job,F_task,energy,C_job,C_task,LB_job,LB_task"
    assert rep.cost("job") == 4.0 and rep.flow("task") == pytest.approx(3.0)


def test_oracle_errors_and_edge_cases():
    p = PowerFunction(2.0)
    assert oracle_single_task_cost([], [], p) == 0.0
    assert oracle_single_task_cost([0.0, 3.0], [1, 1], p) == pytest.approx(6.0)
    with pytest.raises(PowerDomainError):
        oracle_single_task_cost([1.0], [0.5], p)
    with pytest.raises(ValueError):
        oracle_single_task_cost([1.0], [1, 2], p)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.sampled_from([1.5, 2.0, 3.0]))
def test_oracle_is_a_lower_bound_for_task_srpt_on_isolated_jobs(m, r, alpha):
    p = PowerFunction(alpha)
    w = Workload((JobSpec(0.0, (m,), (r,)),))
    rep = compute(run(w, Policy("task_srpt"), 1, p))
    assert rep.C_task >= oracle_single_task_cost([m, r], [2, 1], p) * (1 - 1e-9)
