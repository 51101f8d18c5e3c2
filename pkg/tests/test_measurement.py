import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorfield.errors import DomainError
from mirrorfield.measurement import (bump_window, conditioned_sweep, decay_slope, load_window,
                                     one_bit_flux, povm_weights, random_window, sweep_csv,
                                     thermal_correlator, thermal_gain, thermal_regime,
                                     transported_correlator, unitarity_sum_check, vacuum_correlator,
                                     window_overlap, window_variance, zero_window)
from mirrorfield.trajectory import InertialTrajectory, ThermalTrajectory


def test_vacuum_correlator_value_and_symmetry():
    assert vacuum_correlator(1.0, 0.0, eta=0.0) == pytest.approx(-0.079577, abs=1e-6)
    assert vacuum_correlator(0.0, 1.0, eta=0.0) == vacuum_correlator(1.0, 0.0, eta=0.0)
    with pytest.raises(DomainError):
        vacuum_correlator(2.0, 2.0)


def test_vacuum_correlator_regulated_limit():
    z = vacuum_correlator(3.0, 1.0, eta=1e-6)
    assert z.real == pytest.approx(-1 / (16 * math.pi), rel=1e-10)
    assert abs(z.imag) < 1e-7


def test_transported_thermal_correlator():
    m = ThermalTrajectory(1.0)
    val = transported_correlator(m, 20.0, 10.0)
    assert val == pytest.approx(-3.61e-6, rel=0.01)
    assert val == pytest.approx(thermal_correlator(10.0), rel=1e-8)


def test_identity_transport_is_vacuum():
    x = np.array([2.0, 5.0])
    assert np.allclose(transported_correlator(InertialTrajectory(), x, 0.5),
                       vacuum_correlator(x, 0.5, eta=0.0), rtol=1e-14)


def test_zero_window_gives_zero_flux():
    w = zero_window()
    assert np.all(one_bit_flux(w, 1, np.array([0.0, 4.0])) == 0.0)
    assert window_variance(w) == 0.0


def test_sign_structure():
    w = bump_window(-3.0, -1.0, 0.7)
    xp = np.linspace(0.0, 10.0, 11)
    f0, f1 = one_bit_flux(w, 0, xp), one_bit_flux(w, 1, xp)
    assert np.all(f0 < 0) and np.all(f1 > 0)
    assert np.allclose(f0, -f1, rtol=0, atol=0)


def test_overlap_against_adaptive_quadrature():
    from scipy.integrate import quad

    w = bump_window(-3.0, -1.0, 1.3)
    ref = quad(lambda y: w(y) * (-1 / (4 * math.pi * (2.0 - y) ** 2)), -3.0, -1.0, epsabs=0, epsrel=1e-12)[0]
    assert window_overlap(w, 2.0)[0] == pytest.approx(ref, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_outcome_sum_vanishes(seed):
    w = random_window(np.random.default_rng(seed))
    xp = np.array([0.0, 2.5, 40.0])
    f0 = one_bit_flux(w, 0, xp)
    assert np.all(np.abs(unitarity_sum_check(w, xp)) <= 1e-10 * np.abs(f0))


def test_power_law_decay():
    w = bump_window(-2.0, -1.0)
    assert decay_slope(w, np.geomspace(10, 1000, 40)) == pytest.approx(-4.0, abs=0.1)


def test_flux_is_largest_next_to_the_window():
    w = bump_window(-6.0, -2.0, 2.0)
    xp = np.linspace(-1.9, 200.0, 2000)
    vals = np.abs(one_bit_flux(w, 1, xp))
    assert np.all(np.diff(vals) < 0)


def test_damped_below_undamped():
    w = bump_window(-3.0, -1.0, 1.5)
    xp = np.array([1.0, 5.0])
    und = one_bit_flux(w, 1, xp)
    dam = one_bit_flux(w, 1, xp, damped=True)
    assert np.all(np.abs(dam) < np.abs(und))
    assert np.all(np.abs(dam) > 0)


def test_variance_scales_quadratically_and_weights_sum():
    w1 = bump_window(-3.0, -1.0, 1.0)
    w2 = bump_window(-3.0, -1.0, 2.0)
    v1 = window_variance(w1)
    assert v1 > 0
    assert window_variance(w2) == pytest.approx(4 * v1, rel=1e-7)
    p0, p1 = povm_weights(w1)
    assert p0 + p1 == pytest.approx(1.0, abs=1e-15)
    assert 0 < p1 < p0


def test_variance_translation_invariant():
    a = window_variance(bump_window(-3.0, -1.0))
    b = window_variance(bump_window(7.0, 9.0, x_E=9.0))
    assert a == pytest.approx(b, rel=1e-8)


def test_gain_decays_at_twice_kappa():
    m = ThermalTrajectory(1.0)
    xl = np.linspace(10.0, 25.0, 16)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        g_minus, g_plus = thermal_gain(m, bump_window(3.0, 5.0), xl)
    rate = np.polyfit(xl, np.log(np.abs(g_minus)), 1)[0]
    assert rate == pytest.approx(-2.0, rel=0.05)
    late = np.abs(g_plus[8:])
    assert np.all(np.isfinite(g_plus))
    assert late.max() / late.min() < 1.05


def test_gain_signs_follow_outcome():
    m = ThermalTrajectory(1.0)
    w = bump_window(3.0, 5.0)
    assert thermal_gain(m, w, 12.0, outcome=1)[0] > 0
    assert thermal_gain(m, w, 12.0, outcome=0)[0] < 0


def test_gain_of_zero_window():
    assert thermal_gain(ThermalTrajectory(1.0), zero_window(3.0, 5.0), 12.0) == (0.0, 0.0)


def test_gain_warns_outside_thermal_regime():
    m = ThermalTrajectory(1.0)
    w = bump_window(-6.0, -4.0)
    assert not thermal_regime(m, w)
    with pytest.warns(UserWarning):
        thermal_gain(m, w, 1.0)


def test_input_errors(tmp_path):
    w = bump_window(-3.0, -1.0)
    with pytest.raises(DomainError):
        one_bit_flux(w, 1, -2.0)
    with pytest.raises(DomainError):
        one_bit_flux(w, 2, 1.0)
    with pytest.raises(DomainError):
        bump_window(1.0, 1.0)
    with pytest.raises(DomainError):
        bump_window(-3.0, -1.0, x_E=-2.0)
    with pytest.raises(DomainError):
        thermal_gain(ThermalTrajectory(1.0), bump_window(3.0, 5.0), 4.0)


def test_load_window(tmp_path):
    x = np.linspace(-3.0, -1.0, 41)
    lam = np.sin(math.pi * (x + 3.0) / 2.0) ** 2
    lam[0] = lam[-1] = 0.0
    path = tmp_path / "w.txt"
    np.savetxt(path, np.column_stack([x, lam]), header="x lambda")
    w = load_window(path)
    assert (w.s_lo, w.s_hi, w.x_E) == (-3.0, -1.0, -1.0)
    assert w(-2.0) == pytest.approx(1.0, abs=1e-12)
    assert one_bit_flux(w, 1, 1.0) > 0
    bad = tmp_path / "bad.txt"
    np.savetxt(bad, np.column_stack([x, lam + 0.1]))
    with pytest.raises(DomainError):
        load_window(bad)


def test_sweep_csv(tmp_path):
    sweep = conditioned_sweep(bump_window(-2.0, -1.0), [0.0, 1.0, 2.0])
    text = sweep_csv(sweep, tmp_path / "m.csv", meta=["run"])
    lines = text.splitlines()
    assert lines[0] == "# run"
    assert lines[1] == "x_plus,flux_outcome0,flux_outcome1"
    assert len(lines) == 5


def test_variance_matches_fourier_integral():
    # <X^2> = (1/4 pi) int_0^inf k |lambda_hat(k)|^2 dk
    w = bump_window(-3.0, -1.0, 1.3)
    ys = np.linspace(-3.0, -1.0, 4001)
    ks = np.linspace(1e-6, 60.0, 6001)
    lam_hat = np.exp(-1j * np.outer(ks, ys)) @ (w(ys) * np.gradient(ys))
    ref = np.trapezoid(ks * np.abs(lam_hat) ** 2, ks) / (4 * math.pi)
    assert window_variance(w) == pytest.approx(ref, rel=1e-4)


def test_transported_variance_is_positive_and_finite():
    w = bump_window(3.0, 5.0)
    v = window_variance(w, ThermalTrajectory(1.0))
    # deep in the thermal region the mode structure shifts <X^2> only slightly
    assert 0 < v < 2 * window_variance(w)
