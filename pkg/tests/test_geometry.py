import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aoivnet.config import config_from_mapping
from aoivnet.geometry import (
    Line,
    NodeKind,
    populate_line,
    realization_rng,
    sample_lines,
    sample_realization,
)


def test_line_count_mean():
    # lambda_l * pi * 2R with lambda_l = 5e-3/pi, R = 1000 -> 10 lines
    rng = np.random.default_rng(1)
    counts = np.array([len(sample_lines(5e-3 / math.pi, 1000.0, rng)) for _ in range(10_000)])
    assert abs(counts.mean() - 10.0) < 3 * math.sqrt(10.0 / counts.size)


def test_lines_hit_disk():
    rng = np.random.default_rng(2)
    lines = sample_lines(5e-3 / math.pi, 1000.0, rng)
    assert all(abs(ln.rho) <= 1000.0 and 0.0 <= ln.theta < math.pi for ln in lines)


def test_zero_line_intensity():
    assert sample_lines(0.0, 1000.0, np.random.default_rng(0)) == []


def test_chord_length():
    assert 2 * Line(600.0, 0.3).half_chord(1000.0) == pytest.approx(1600.0)


def test_points_lie_on_line():
    ln = Line(250.0, 1.1)
    nodes = populate_line(ln, 0.01, NodeKind.TX_VEHICLE, 1000.0, np.random.default_rng(3))
    xy = np.array([n.position for n in nodes])
    assert np.allclose(ln.residual(xy), 0.0, atol=1e-9)
    assert np.all(np.hypot(xy[:, 0], xy[:, 1]) <= 1000.0 + 1e-9)


def test_mean_vehicles_per_line():
    # chord 2000 m at rho = 0, lambda = 1e-2 -> 20 vehicles
    rng = np.random.default_rng(4)
    counts = [len(populate_line(Line(0.0, 0.5), 1e-2, NodeKind.TX_VEHICLE, 1000.0, rng)) for _ in range(4000)]
    assert abs(np.mean(counts) - 20.0) < 3 * math.sqrt(20.0 / 4000)


def test_realization_deterministic(net):
    a = sample_realization(net, realization_rng(5, 17))
    b = sample_realization(net, realization_rng(5, 17))
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.tagged_tx, b.tagged_tx)
    c = sample_realization(net, realization_rng(5, 18))
    assert not np.array_equal(a.positions, c.positions)


def test_tagged_link(net):
    real = sample_realization(net, np.random.default_rng(6))
    assert real.link_distance == pytest.approx(net.x_r)
    assert real.lines[real.tagged_line_index].rho == 0.0
    on_tagged = real.line_index == real.tagged_line_index
    assert np.allclose(real.lines[real.tagged_line_index].residual(real.positions[on_tagged]), 0.0, atol=1e-9)


def test_kinds_and_nodes(net):
    real = sample_realization(net, np.random.default_rng(7))
    nodes = real.nodes
    assert len(nodes) == real.n_interferers
    assert {n.kind for n in nodes} <= {NodeKind.TX_VEHICLE, NodeKind.TX_RSU}
    assert np.allclose(real.distances(), [math.hypot(*n.position) for n in nodes])


@settings(max_examples=30, deadline=None)
@given(angle=st.floats(-10.0, 10.0), index=st.integers(0, 1000))
def test_rotation_preserves_distances(angle, index):
    net = config_from_mapping({})
    real = sample_realization(net, realization_rng(0, index))
    rot = real.rotated(angle)
    assert np.allclose(np.sort(rot.distances()), np.sort(real.distances()))
    assert rot.link_distance == pytest.approx(real.link_distance)
    for i, ln in enumerate(rot.lines):
        on = rot.line_index == i
        assert np.allclose(ln.residual(rot.positions[on]), 0.0, atol=1e-6)
        assert np.allclose(ln.point(rot.offset[on]), rot.positions[on], atol=1e-6)
