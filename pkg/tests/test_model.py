import pytest
from hypothesis import given

from mrspeed import Policy, PowerFunction, run
from mrspeed.model import (JobSpec, Kind, ModelError, SystemState, TaskState, Workload, beta_of_instance,
                           cumulative_remaining, is_free, load, z_value)

from conftest import workloads


def state(*tasks, reduces=None):
    ts = tuple(TaskState(i, j, Kind.MAP if k == "m" else Kind.REDUCE, rem, 0.0)
               for i, (j, k, rem) in enumerate(tasks))
    counts = reduces if reduces is not None else {}
    for t in ts:
        counts.setdefault(t.job_id, sum(1 for x in ts if x.job_id == t.job_id and not x.is_map))
    return SystemState(0.0, ts, counts)


def test_is_free_rules():
    s = state((0, "m", 0.3), (0, "m", 2.0), (0, "r", 1.0), (1, "r", 4.0))
    assert is_free(s.tasks[0], s)
    assert not is_free(s.tasks[2], s)
    assert is_free(s.tasks[3], s)


def test_is_free_rejects_finished_or_absent():
    s = state((0, "m", 1.0))
    with pytest.raises(ModelError):
        is_free(TaskState(9, 0, Kind.MAP, 1.0, 0.0), s)
    with pytest.raises(ModelError):
        is_free(s.tasks[0]._replace(remaining=0.0), s)


def test_load_and_z():
    s = state((0, "m", 1.0), (0, "r", 1.0), (0, "r", 1.0))
    assert load(s.tasks[0], s) == 3
    assert load(*state((0, "m", 1.0)).tasks, state((0, "m", 1.0))) == 1
    padded = state((0, "m", 1.0), reduces={0: 5})
    assert load(padded.tasks[0], padded) == 6
    with pytest.raises(ModelError):
        load(s.tasks[1], s)
    one = state((0, "m", 1.0), (0, "r", 1.0))
    assert z_value(one.tasks[0], one, 5) == pytest.approx(3.0)
    eight = state(*[(0, "m", 1.0)] * 8, reduces={0: 1})
    assert z_value(eight.tasks[0], eight, 5) == pytest.approx(1.4)
    with pytest.raises(ModelError):
        z_value(s.tasks[1], s, 5)


def test_cumulative_remaining():
    s = state((0, "m", 1.0), (0, "r", 5.0))
    assert cumulative_remaining(0, s) == 6.0
    assert cumulative_remaining(0, s, "map") == 1.0
    assert cumulative_remaining(3, s) == 0.0
    with pytest.raises(ModelError):
        cumulative_remaining(0, s, "reduce")


def test_beta():
    assert beta_of_instance([JobSpec(0, (3.0,), (5.0,))]) == 1.0
    assert beta_of_instance(Workload((JobSpec(0, (8.0, 2.0), (4.0, 2.0)),))) == 4.0
    assert beta_of_instance([JobSpec(0, (2.0,), (2.0, 0.0))]) == 1.0
    with pytest.raises(ModelError):
        beta_of_instance([JobSpec(0, (1.0,), (0.0,))])


def test_counts():
    s = state((0, "m", 1.0), (0, "r", 1.0), (1, "r", 2.0), (2, "m", 1.0), (2, "m", 1.0))
    assert s.counts() == {"n": 5, "n_f": 4, "n_c": 1, "n_fr": 1, "m": 3, "J": 2, "r_f": 1, "r": 2,
                          "n_jobs": 3}
    assert s.brothers(s.tasks[3]) == 2
    with pytest.raises(ModelError):
        s.brothers(s.tasks[1])


def test_jobspec_validation_and_canonical_order():
    with pytest.raises(ModelError):
        JobSpec(-1.0, (1.0,))
    with pytest.raises(ModelError):
        JobSpec(0.0, (-1.0,))
    w = Workload((JobSpec(2.0, (1.0,)), JobSpec(0.0, (2.0,)), JobSpec(2.0, (3.0,))))
    assert [j.map_sizes[0] for j in w.jobs] == [2.0, 1.0, 3.0]
    jobs = w.instantiate()
    assert [t.task_id for j in jobs for t in j.tasks] == [0, 1, 2]


@given(workloads(max_jobs=6))
def test_count_identities_and_monotone_freeing(w):
    traj = run(w, Policy("task_srpt"), 2, PowerFunction(2.0))
    freed: set[int] = set()
    for iv in traj.intervals:
        s = iv.state
        c = s.counts()
        assert c["n"] == c["n_f"] + c["n_c"]
        assert c["n_f"] == c["m"] + c["n_fr"]
        assert c == iv.counts
        # recomputed from scratch
        caged = sum(1 for t in s.tasks if not t.is_map and any(
            x.is_map and x.job_id == t.job_id for x in s.tasks))
        assert c["n_c"] == caged
        if c["J"] == 0:
            assert c["m"] == 0 and c["n_c"] == 0
        free_reduces = {t.task_id for t in s.free_tasks if not t.is_map}
        assert freed & {t.task_id for t in s.tasks} <= free_reduces
        freed |= free_reduces
