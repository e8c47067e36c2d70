"""Hand-derived reference values, frozen before the implementation was exercised."""

import math
from pathlib import Path

import pytest

from mrspeed import JobSpec, Policy, PowerFunction, Workload, compute, run
from mrspeed.metrics import opt_lower_bound, oracle_single_task_cost
from mrspeed.potential import PotentialConfig, f_eval, g_eval, phi_eval
from mrspeed.model import SystemState, TaskState, Kind
from mrspeed.workload import WorkloadSpec, equalize_reduce_counts, generate, load_trace

DATA = Path(__file__).parent / "data"
SQ2, SQ3 = math.sqrt(2.0), math.sqrt(3.0)
ONE = Workload((JobSpec(0.0, (1.0,), (1.0,)),))
P2 = PowerFunction(2.0)


def test_job_srpt_single_job_equals_twice_the_work():
    assert compute(run(ONE, Policy("job_srpt"), 1, P2)).C_job == pytest.approx(4.0, abs=1e-12)


def test_task_srpt_two_interval_trajectory():
    traj = run(ONE, Policy("task_srpt"), 1, P2)
    assert [iv.t_end for iv in traj.intervals] == pytest.approx([1 / SQ3, 1 / SQ3 + 1 / SQ2], abs=1e-15)
    expected = (2 / SQ3 + 1 / SQ2) + (SQ3 + SQ2)
    assert compute(traj).C_task == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(5.008071689507771, abs=1e-12)


def test_baseline_task_matches_task_srpt_when_map_is_shorter():
    a = compute(run(ONE, Policy("baseline_task"), 1, P2)).C_task
    assert a == pytest.approx(5.008071689507771, abs=1e-12)


def test_triple_single_merged_map_lane_then_reduce_lane():
    traj = run(ONE, Policy("triple_single"), 1, P2)
    first, second = traj.intervals
    assert first.decision.speeds[0] == pytest.approx(2 * SQ2)
    assert second.decision.speeds[0] == pytest.approx(SQ2)
    # map phase: 2 tasks for 1/(2 sqrt2), power 8; reduce phase: 1 task for 1/sqrt2, power 2
    assert compute(traj).C_task == pytest.approx(4 * SQ2, abs=1e-12)


def test_three_job_hand_instance_job_srpt():
    w = load_trace(DATA / "hand3.json")
    rep = compute(run(w, Policy("job_srpt"), 2, P2))
    a = 0.5 / math.sqrt(1.5)
    assert rep.F_job == pytest.approx(3.5 + 3 * a, abs=1e-12)
    assert rep.energy == pytest.approx(3.5 + 3 * a, abs=1e-12)
    assert rep.C_job == pytest.approx(7 + 3 / math.sqrt(1.5), abs=1e-12)
    assert rep.LB_job == pytest.approx(9.0)


def test_lower_bound_examples():
    w = Workload((JobSpec(0.0, (3.0,), (4.0,)),))
    assert opt_lower_bound(w, P2, "job") == pytest.approx(14.0)
    unit = Workload((JobSpec(0.0, (1.0,)),))
    # P'(s*) = 2.5 (2/3)^0.6 for alpha = 2.5
    assert opt_lower_bound(unit, PowerFunction(2.5), "task") == pytest.approx(2.5 * (2 / 3) ** 0.6, rel=1e-12)
    assert opt_lower_bound(unit, PowerFunction(2.5), "task") == pytest.approx(1.96013, abs=1e-5)
    assert opt_lower_bound(Workload(()), P2) == 0.0


def test_single_task_oracle():
    # weight 2: s = sqrt2, cost per unit 4/sqrt2; weight 1: s = 1, cost per unit 2
    assert oracle_single_task_cost([1.0, 1.0], [2, 1], P2) == pytest.approx(2 * SQ2 + 2, abs=1e-10)


def test_f_and_g_values():
    assert f_eval(0, 3, P2) == 0.0
    assert f_eval(2, 1, P2) == pytest.approx(2 + 2 * SQ2)
    assert g_eval(3.0, 1, P2) == pytest.approx(2 * SQ3)
    assert g_eval(1.0, 5, P2) == pytest.approx(f_eval(5, 1, P2))


def test_phi_single_task_versus_empty():
    a = SystemState(0.0, (TaskState(0, 0, Kind.MAP, 2.0, 0.0),), {0: 0})
    c = SystemState(0.0, (), {0: 0})
    cfg = PotentialConfig("job", K=1, c1=1.0, c2=0.0)
    assert phi_eval(a, c, cfg, P2) == pytest.approx(4.0)


# Seeded regressions, frozen from the first verified run.
FROZEN = {
    ("job_srpt", 5): (368.1324571288667, 536.887904017195),
    ("task_srpt", 5): (409.3038162617639, 519.419082609811),
    ("baseline_job", 5): (365.4329198290599, 475.01473165918884),
    ("baseline_task", 5): (402.1300712286962, 461.35914731106266),
}


@pytest.mark.parametrize("name,K", sorted(FROZEN))
def test_frozen_seeded_costs(name, K):
    w = generate(WorkloadSpec(0.5, 20, seed=7))
    rep = compute(run(w, Policy(name), K, PowerFunction(2.5)))
    assert (rep.C_job, rep.C_task) == pytest.approx(FROZEN[(name, K)], rel=1e-12)


def test_frozen_triple_lane_costs():
    w = equalize_reduce_counts(generate(WorkloadSpec(0.5, 20, seed=7)))
    p = PowerFunction(1.5)
    assert compute(run(w, Policy("triple_single"), 1, p)).C_task == pytest.approx(597.4225510192983, rel=1e-12)
    assert compute(run(w, Policy("triple_multi"), 5, p)).C_task == pytest.approx(477.78947808829406, rel=1e-12)
