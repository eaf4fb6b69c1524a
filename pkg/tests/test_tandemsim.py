import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aoivnet.analytic import QueueParams, avg_aoi_tandem, mm1_aoi
from aoivnet.tandemsim import (
    InsufficientSampleError,
    aoi_trajectory,
    average_aoi,
    average_aoi_decomposition,
    departure_poisson_check,
    fcfs_stage,
    generation_only_age,
    read_trace_csv,
    simulate,
    simulate_average_aoi,
    simulate_from_arrivals,
    write_trace_csv,
)


def test_three_packets_by_hand():
    gen = np.array([0.0, 0.1, 0.5])
    s1 = np.array([0.3, 0.1, 0.05])
    s2 = np.array([0.1, 0.2, 0.1])
    tr = simulate_from_arrivals(gen, s1, s2, horizon=10.0)
    # stage 1: 0->0.3, 0.3->0.4, 0.5->0.55; stage 2: 0.3->0.4, 0.4->0.6, 0.6->0.7
    assert np.allclose(tr.s1_start, [0.0, 0.3, 0.5])
    assert np.allclose(tr.s1_end, [0.3, 0.4, 0.55])
    assert np.allclose(tr.s2_start, [0.3, 0.4, 0.6])
    assert np.allclose(tr.s2_end, [0.4, 0.6, 0.7])
    traj = aoi_trajectory(tr)
    assert traj.age(0.5) == pytest.approx(0.5 - 0.0)
    assert traj.age(0.65) == pytest.approx(0.65 - 0.1)
    assert np.allclose(traj.after, [0.4, 0.5, 0.2])


def test_horizon_drops_unfinished():
    tr = simulate_from_arrivals(np.array([0.0, 1.0]), np.array([0.5, 0.5]), np.array([0.5, 5.0]), horizon=3.0)
    assert len(tr) == 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(1e-4, 1.0), st.floats(0.0, 1.0)), min_size=1, max_size=200))
def test_fcfs_invariants(pairs):
    gaps, service = map(np.array, zip(*pairs))
    arrivals = np.cumsum(gaps)
    start, end = fcfs_stage(arrivals, service)
    assert np.all(start >= arrivals)
    assert np.all(end >= start)
    assert np.all(start[1:] >= end[:-1])
    # reference loop
    t = -np.inf
    for a, s, st_, en in zip(arrivals, service, start, end):
        ref_start = max(a, t)
        t = ref_start + s
        assert st_ == pytest.approx(ref_start, abs=1e-12)
        assert en == pytest.approx(t, abs=1e-12)


def test_deterministic():
    q = QueueParams(100, 200, 300)
    a, b = simulate(q, 50.0, 3), simulate(q, 50.0, 3)
    assert np.array_equal(a.s2_end, b.s2_end)


def test_zero_service_limit():
    q = QueueParams(100, math.inf, math.inf)
    est, _ = simulate_average_aoi(q, 2000.0, [[9, r] for r in range(5)])
    assert est == pytest.approx(0.010, rel=0.02)


def test_mm1_limit():
    q = QueueParams(100, 200, math.inf)
    est, se = simulate_average_aoi(q, 2000.0, [[1, r] for r in range(10)])
    assert abs(est - mm1_aoi(100, 200)) < max(4 * se, 0.01 * est)


def test_area_decomposition_agrees():
    tr = simulate(QueueParams(100, 150, 300), 500.0, 5)
    assert average_aoi(tr) == pytest.approx(average_aoi_decomposition(tr), rel=1e-10)


def test_generation_only_age():
    tr = simulate(QueueParams(100, 200, 200), 1000.0, 6)
    assert generation_only_age(tr) == pytest.approx(0.01, rel=0.03)
    assert average_aoi(tr) > generation_only_age(tr)


def test_stderr_halves_with_four_times_horizon():
    q = QueueParams(100, 200, 300)
    seeds = [[2, r] for r in range(40)]
    _, se_short = simulate_average_aoi(q, 250.0, seeds)
    _, se_long = simulate_average_aoi(q, 1000.0, seeds)
    assert 0.3 < se_long / se_short < 0.75


def test_warmup_insensitive():
    q = QueueParams(100, 200, 300)
    tr = simulate(q, 2000.0, 7)
    a, b = average_aoi(tr, 0.0), average_aoi(tr, 400.0)
    assert abs(a - b) / b < 0.01


def test_des_near_closed_form():
    # the closed form ignores stage correlation; it stays within ~10% here
    q = QueueParams(100, 200, 300)
    est, _ = simulate_average_aoi(q, 2000.0, [[3, r] for r in range(5)])
    assert abs(est - avg_aoi_tandem(q)) / avg_aoi_tandem(q) < 0.1


def test_insufficient_sample():
    tr = simulate(QueueParams(10, 200, 300), 5.0, 0)
    with pytest.raises(InsufficientSampleError):
        average_aoi(tr)


def test_stage1_departures_are_poisson():
    tr = simulate(QueueParams(100, 200, 300), 1000.0, 8)
    assert not departure_poisson_check(tr, 100.0, stage=0).rejected
    assert not departure_poisson_check(tr, 100.0, stage=1).rejected


def test_ks_detects_wrong_rate():
    tr = simulate(QueueParams(100, 200, 300), 1000.0, 8)
    assert departure_poisson_check(tr, 150.0, stage=1).rejected


def test_trace_round_trip(tmp_path):
    tr = simulate(QueueParams(100, 200, 300), 20.0, 9)
    path = write_trace_csv(tr, tmp_path / "trace.csv")
    back = read_trace_csv(path, horizon=tr.horizon)
    for col in ("gen", "s1_start", "s1_end", "s2_start", "s2_end"):
        assert np.array_equal(getattr(back, col), getattr(tr, col))
    assert path.read_text().splitlines()[0] == "index,gen,s1_start,s1_end,s2_start,s2_end"


def test_packet_records():
    tr = simulate(QueueParams(100, 200, 300), 5.0, 10)
    pk = tr.packets
    assert len(pk) == len(tr)
    assert pk[0].system_time == pytest.approx(tr.system_times[0])


@pytest.mark.parametrize("bad", [QueueParams(0, 1, 1), QueueParams(1, -1, 1)])
def test_rejects_bad_rates(bad):
    with pytest.raises(ValueError):
        simulate(bad, 10.0, 0)
