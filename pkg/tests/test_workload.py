import json

import numpy as np
import pytest
from hypothesis import given

from mrspeed.model import JobSpec, Workload, beta_of_instance
from mrspeed.workload import (TraceFormatError, WorkloadSpec, equalize_reduce_counts, from_dict, generate,
                              load_trace, save_trace, stream, to_dict)

from conftest import workloads


def test_generate_is_deterministic():
    spec = WorkloadSpec(0.5, 1000, seed=3)
    assert generate(spec) == generate(spec)
    assert json.dumps(to_dict(generate(spec))) == json.dumps(to_dict(generate(spec)))
    assert generate(spec) != generate(WorkloadSpec(0.5, 1000, seed=4))


def test_streams_are_independent_per_key():
    spec = WorkloadSpec(1.0, 50)
    a = generate(spec, stream(0, 0, 1))
    assert a == generate(spec, stream(0, 0, 1))
    assert a != generate(spec, stream(0, 1, 0))


def test_empirical_means():
    w = generate(WorkloadSpec(20.0, 2500, seed=1))
    maps = np.array([x for j in w.jobs for x in j.map_sizes])
    reduces = np.array([x for j in w.jobs for x in j.reduce_sizes])
    assert len(maps) >= 100_000
    assert maps.mean() == pytest.approx(3.0, rel=0.02)
    assert reduces.mean() == pytest.approx(5.0, rel=0.02)
    assert min(len(j.map_sizes) for j in w.jobs) >= 1
    assert min(len(j.reduce_sizes) for j in w.jobs) == 0
    assert all(float(j.arrival).is_integer() and 0 <= j.arrival < 2500 for j in w.jobs)


def test_lambda_zero_gives_empty_workload():
    assert generate(WorkloadSpec(0.0, 10)).jobs == ()


@pytest.mark.parametrize("kw", [dict(lam=-1.0, slots=1), dict(lam=1.0, slots=0),
                                dict(lam=1.0, slots=1, mean_map_size=0.0)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        WorkloadSpec(**kw)


def test_equalize_examples():
    w = Workload(tuple(JobSpec(0, (1.0,), (1.0,) * k) for k in (1, 3, 2)))
    e = equalize_reduce_counts(w)
    assert e.reduce_counts == [3, 3, 3]
    assert sum(x == 0.0 for j in e.jobs for x in j.reduce_sizes) == 3
    same = Workload((JobSpec(0, (1.0,), (2.0,)), JobSpec(1, (1.0,), (3.0,))))
    assert equalize_reduce_counts(same) == same
    single = Workload((JobSpec(0, (1.0,), (2.0, 3.0)),))
    assert equalize_reduce_counts(single) == single


@given(workloads(max_jobs=8))
def test_equalize_preserves_work_and_beta(w):
    e = equalize_reduce_counts(w)
    assert e.total_work == w.total_work
    assert e.is_equalized
    nonzero = [x for j in w.jobs for x in j.map_sizes + j.reduce_sizes if x > 0]
    nonzero_e = [x for j in e.jobs for x in j.map_sizes + j.reduce_sizes if x > 0]
    assert sorted(nonzero) == sorted(nonzero_e)
    if any(x > 0 for j in w.jobs for x in j.reduce_sizes):
        assert beta_of_instance(e) == beta_of_instance(w)


@given(workloads(max_jobs=8))
def test_trace_round_trip(tmp_path_factory, w):
    path = tmp_path_factory.mktemp("t") / "trace.json"
    save_trace(w, path)
    assert load_trace(path) == w


def test_trace_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"jobs": [{"arrival": 0, "map_sizes": [1, -1]}]}')
    with pytest.raises(TraceFormatError, match=r"jobs\[0\]\.map_sizes\[1\]"):
        load_trace(p)
    p.write_text('{"jobs": [\n{"arrival": 0,, }]}')
    with pytest.raises(TraceFormatError, match="line 2"):
        load_trace(p)
    p.write_text('{"jobs": [{"map_sizes": [1]}]}')
    with pytest.raises(TraceFormatError, match=r"jobs\[0\]\.arrival"):
        load_trace(p)
    p.write_text('{"jobs": [{"arrival": -2, "map_sizes": [1]}]}')
    with pytest.raises(TraceFormatError, match=r"jobs\[0\]"):
        load_trace(p)
    with pytest.raises(TraceFormatError):
        from_dict({"tasks": []})


def test_empty_trace(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text('{"jobs": []}')
    assert load_trace(p) == Workload(())


def test_trace_canonical_order(tmp_path):
    p = tmp_path / "t.json"
    p.write_text('{"jobs": [{"arrival": 5, "map_sizes": [1]}, {"arrival": 1, "map_sizes": [2]}]}')
    assert [j.arrival for j in load_trace(p).jobs] == [1.0, 5.0]
