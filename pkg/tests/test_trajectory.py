import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mirrorfield.errors import DomainError, MonotonicityError
from mirrorfield.trajectory import (FunctionTrajectory, InertialTrajectory, PulseTrajectory,
                                    TableTrajectory, ThermalTrajectory, load_trajectory,
                                    make_trajectory, mobius, random_monotone_trajectory)


@pytest.fixture
def thermal():
    return ThermalTrajectory(1.0)


@pytest.fixture
def pulse():
    return PulseTrajectory(1.0, 50.0)


def test_thermal_far_past_is_at_rest(thermal):
    assert thermal.eval(-30.0) == pytest.approx(-30.0, abs=1e-12)


def test_thermal_slope_at_origin(thermal):
    assert thermal.eval(0.0, 1) == pytest.approx(0.5, abs=1e-15)
    h = 1e-5
    fd = (thermal.eval(h) - thermal.eval(-h)) / (2 * h)
    assert fd == pytest.approx(0.5, rel=1e-9)


def test_pulse_late_time_offset(pulse):
    assert pulse.eval(100.0) == pytest.approx(50.0, abs=1e-10)


def test_asymptotics(thermal, pulse):
    assert thermal.eval(-60.0) - (-60.0) == pytest.approx(0.0, abs=1e-12)
    assert -1e-12 < thermal.eval(40.0) < 0
    assert pulse.eval(-60.0) == pytest.approx(-60.0, abs=1e-12)
    assert pulse.eval(150.0) - 100.0 == pytest.approx(0.0, abs=1e-12)
    assert pulse.eval(-60.0, 1) == pytest.approx(1.0, abs=1e-12)
    assert pulse.eval(150.0, 1) == pytest.approx(1.0, abs=1e-12)


def test_overflow_safe_at_large_arguments(thermal, pulse):
    for x in (-700.0, 700.0):
        vals = thermal.derivatives(x)
        assert all(np.isfinite(v) for v in vals)
        vals = pulse.derivatives(x)
        assert all(np.isfinite(v) for v in vals)


def test_thermal_inverse_round_trip(thermal):
    assert thermal.invert(thermal.eval(2.0)) == pytest.approx(2.0, abs=1e-10)


def test_thermal_inverse_rejects_outside_range(thermal):
    with pytest.raises(DomainError):
        thermal.invert(0.5)
    with pytest.raises(DomainError):
        thermal.invert(0.0)


def test_pulse_inverse_by_reevaluation(pulse):
    g = pulse.invert(25.0)
    assert abs(pulse.eval(g) - 25.0) < 1e-12


def test_round_trip_on_log_grid(thermal, pulse):
    xs = np.concatenate([-np.geomspace(1e-3, 300, 40), np.geomspace(1e-3, 30, 40)])
    for m in (thermal, pulse):
        back = m.invert(m.eval(xs))
        assert np.max(np.abs(back - xs)) < 1e-10


@pytest.mark.parametrize("kind", ["thermal", "pulse"])
@pytest.mark.parametrize("x", [-8.0, -1.3, 0.0, 0.7, 3.0, 24.0, 49.5])
def test_derivatives_match_finite_differences(kind, x):
    m = make_trajectory(kind, 1.0, 50.0)
    h = 1e-4
    for order in (1, 2, 3):
        fd = (m.eval(x + h, order - 1) - m.eval(x - h, order - 1)) / (2 * h)
        exact = m.eval(x, order)
        assert abs(fd - exact) <= 1e-6 * max(abs(exact), 1e-3)


@settings(max_examples=60, deadline=None)
@given(st.floats(-50, 50), st.floats(0.01, 20))
def test_monotone(x1, gap):
    for m in (ThermalTrajectory(1.3), PulseTrajectory(0.8, 30.0)):
        assert m.eval(x1) < m.eval(x1 + gap)


def test_identity_trajectory():
    m = InertialTrajectory()
    xs = np.linspace(-5, 5, 11)
    assert np.array_equal(m.eval(xs), xs)
    assert m.invert(3.25) == 3.25


def test_order_out_of_range(thermal):
    with pytest.raises(DomainError):
        thermal.eval(0.0, 4)


def test_user_function_nonmonotone_detected():
    m = FunctionTrajectory(lambda x: np.sin(x), domain=(-3.0, 3.0))
    assert m.eval(0.0, 1) == pytest.approx(1.0, rel=1e-8)
    with pytest.raises(MonotonicityError):
        m.eval(2.0)


def test_user_function_finite_difference_derivatives():
    m = FunctionTrajectory(lambda x: x + 0.1 * np.tanh(x))
    sech2 = 1 / np.cosh(0.4) ** 2
    assert m.eval(0.4, 1) == pytest.approx(1 + 0.1 * sech2, rel=1e-8)
    assert m.eval(0.4, 3) == pytest.approx(0.1 * (4 * sech2 * np.tanh(0.4) ** 2 - 2 * sech2**2), rel=1e-4)


def test_out_of_domain():
    m = mobius(0.0, 1.0, 1.0, -0.1, domain=(-5.0, 5.0))
    with pytest.raises(DomainError):
        m.eval(6.0)


def test_table_loading(tmp_path):
    path = tmp_path / "traj.txt"
    xs = np.linspace(-3, 3, 31)
    path.write_text("# x- x+\n" + "\n".join(f"{a} {2 * a + 0.1 * a**3}" for a in xs) + "\n")
    m = load_trajectory(path)
    assert m.eval(1.0) == pytest.approx(2.1, abs=1e-12)
    assert m.invert(m.eval(0.37)) == pytest.approx(0.37, abs=1e-10)


def test_table_rejects_nonmonotone(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 0\n1 2\n2 1\n")
    with pytest.raises(MonotonicityError):
        load_trajectory(path)
    path.write_text("0 0\n1 2 3\n")
    with pytest.raises(DomainError):
        load_trajectory(path)


def test_random_trajectories_are_reproducible():
    a = random_monotone_trajectory(np.random.default_rng(5))
    b = random_monotone_trajectory(np.random.default_rng(5))
    assert isinstance(a, TableTrajectory)
    assert np.array_equal(a.x_plus, b.x_plus)
    assert np.all(np.diff(a.x_plus) > 0)


def test_unknown_kind():
    with pytest.raises(DomainError):
        make_trajectory("spiral")
