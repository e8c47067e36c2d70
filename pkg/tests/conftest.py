import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from mrspeed.model import JobSpec, Workload

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion():
    def report(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return report


sizes = st.one_of(st.just(0.0), st.floats(0.05, 6.0, allow_nan=False, allow_infinity=False))
positive_sizes = st.floats(0.05, 6.0, allow_nan=False, allow_infinity=False)


@st.composite
def job_specs(draw, zero_sizes: bool = True, max_maps: int = 3, max_reduces: int = 3):
    elem = sizes if zero_sizes else positive_sizes
    arrival = draw(st.one_of(st.integers(0, 6).map(float), st.floats(0, 6, allow_nan=False)))
    maps = draw(st.lists(elem, min_size=0 if zero_sizes else 1, max_size=max_maps))
    reduces = draw(st.lists(elem, max_size=max_reduces))
    return JobSpec(arrival, maps, reduces)


@st.composite
def workloads(draw, max_jobs: int = 6, zero_sizes: bool = True, min_jobs: int = 0):
    jobs = draw(st.lists(job_specs(zero_sizes), min_size=min_jobs, max_size=max_jobs))
    return Workload(tuple(jobs))
