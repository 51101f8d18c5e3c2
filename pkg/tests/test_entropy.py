import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorfield.entropy import (IntervalSpec, StepProfile, appendix2_counterexample, cross_ratio_delta,
                                 entropy_report, entropy_sweep, hlw_entropy, hlw_entropy_in,
                                 open_interval_entropy, open_interval_via_rindler, renormalized_entropy,
                                 rindler_entropy, ssa_check, write_sweep_csv)
from mirrorfield.errors import DomainError
from mirrorfield.io import to_json
from mirrorfield.trajectory import (FunctionTrajectory, InertialTrajectory, ThermalTrajectory, mobius,
                                    random_monotone_trajectory)

IDENTITY = InertialTrajectory()


def test_identity_spot_value():
    assert hlw_entropy(IDENTITY, IntervalSpec(0.0, 1.0)) == pytest.approx(0.767528, abs=1e-6)


@given(st.floats(-50, 50), st.floats(0.5, 20))
def test_identity_translation_invariant(c, length):
    s0 = hlw_entropy(IDENTITY, IntervalSpec(0.0, length))
    s1 = hlw_entropy(IDENTITY, IntervalSpec(0.0, length).shifted(c))
    assert s1 == pytest.approx(s0, abs=1e-12)


def test_endpoint_swap_symmetry():
    m = ThermalTrajectory(1.0)
    spec = IntervalSpec(-2.0, 3.0, 1e-3, 4e-3)
    (x1, e1), (x2, e2) = spec.swapped()
    swapped = IntervalSpec(x2, x1, e2, e1)
    assert swapped.x1 == spec.x1
    # the formula is symmetric under exchanging the endpoint pairs
    f, f1, _, _ = m.derivatives(np.array([x1, x2]))
    direct = (2 * math.log(abs(f[1] - f[0])) - math.log(f1[0] * f1[1] * e1 * e2)) / 12
    assert direct == pytest.approx(hlw_entropy(m, spec), abs=1e-14)


def test_cutoff_covariance():
    m = ThermalTrajectory(2.0)
    spec = IntervalSpec(0.5, 4.0, 1e-3, 2e-3)
    assert hlw_entropy_in(m, spec) == pytest.approx(hlw_entropy(m, spec), abs=1e-12)


def test_renormalized_identity_is_zero():
    assert renormalized_entropy(IDENTITY, -3.0, 7.0) == 0.0


def test_renormalized_thermal():
    m = ThermalTrajectory(1.0)
    # deep in the thermal region: (1/12) ln[(sinh(k l/2)/(k l/2))^2]
    l = 4.0
    exact = math.log((math.sinh(l / 2) / (l / 2)) ** 2) / 12
    assert renormalized_entropy(m, 20.0, 20.0 + l) == pytest.approx(exact, rel=1e-9)
    vals = [renormalized_entropy(m, x1, x1 + l) for x1 in (-6.0, -3.0, 0.0, 3.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_renormalized_mobius_vanishes():
    m = mobius(1.0, 2.0, 1.0, 0.3)
    for x1, x2 in ((0.0, 1.0), (0.0, 0.1), (2.0, 2.5)):
        assert abs(renormalized_entropy(m, x1, x2)) < 1e-12


def test_interval_validation():
    with pytest.raises(DomainError):
        IntervalSpec(1.0, 1.0)
    with pytest.raises(DomainError):
        IntervalSpec(0.0, 1.0, eps1=0.0)
    with pytest.warns(UserWarning):
        IntervalSpec(0.0, 1.0, eps1=0.2)
    with pytest.raises(DomainError):
        renormalized_entropy(IDENTITY, 1.0, 1.0)


def test_identity_raw_ssa_value():
    rep = ssa_check(IDENTITY, 0.0, 1.0, "raw")
    assert rep.delta == pytest.approx(math.log(4 / 3) / 6, abs=1e-12)
    assert rep.delta == pytest.approx(0.047947, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.02, 1.0), st.floats(0.0, 1.0))
def test_raw_ssa_equals_cross_ratio(seed, frac, pos):
    m = random_monotone_trajectory(np.random.default_rng(seed))
    lo, hi = m.domain
    l = frac * (hi - lo) / 3
    base = lo + pos * (hi - lo - 3 * l) * (1 - 1e-12)
    rep = ssa_check(m, base, l, "raw")
    assert rep.delta >= -1e-12
    assert rep.delta == pytest.approx(rep.cross_ratio_delta, abs=1e-12)


def test_raw_ssa_cutoff_independent():
    m = ThermalTrajectory(1.0)
    d = [ssa_check(m, -1.0, 0.7, "raw", eps=e).delta for e in (1e-2, 1e-5, 1e-9)]
    assert max(d) - min(d) < 1e-13


def test_cross_ratio_handles_tiny_excess():
    # outer blocks squeezed to 1e-12 of the middle: log1p keeps full precision
    got = cross_ratio_delta([0.0, 1e-12, 1.0 + 1e-12, 1.0 + 2e-12])
    assert got == pytest.approx(1e-24 / 6, rel=1e-6)


def test_renormalized_ssa_counterexample():
    rep = appendix2_counterexample(eps=1e-6)
    assert rep.delta == pytest.approx(math.log(0.75) / 6, abs=1e-3)
    assert rep.delta < 0
    assert rep.delta == pytest.approx(rep.cross_ratio_delta, abs=1e-10)


def test_counterexample_approaches_limit_monotonically():
    target = math.log(0.75) / 6
    gaps = [abs(appendix2_counterexample(eps=e).delta - target) for e in 10.0 ** -np.arange(2, 9)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_step_profile_endpoints():
    p = StepProfile(2.0, 1.0, 1e-4)
    f = p.eval(np.array([2.0, 3.0]))
    assert f[0] == pytest.approx(0.0, abs=1e-15)
    assert f[1] == pytest.approx(1e-4, rel=1e-6)
    with pytest.raises(DomainError):
        StepProfile(0.0, 1.0, 2.0)


def test_ssa_argument_errors():
    with pytest.raises(DomainError):
        ssa_check(IDENTITY, 0.0, 0.0)
    with pytest.raises(DomainError):
        ssa_check(IDENTITY, 0.0, 1.0, kind="other")
    with pytest.raises(DomainError):
        ssa_check(FunctionTrajectory(np.exp, domain=(-1.0, 1.0)), 0.0, 1.0)


def test_rindler_values():
    assert rindler_entropy(1.0, math.exp(6)) == pytest.approx(1.0, abs=1e-14)
    assert rindler_entropy(3.0, 3.0) == 0.0
    with pytest.raises(DomainError):
        rindler_entropy(-1.0, 2.0)


@pytest.mark.parametrize("l,e1,e2", [(1.0, 1e-2, 1e-2), (5.0, 1e-3, 4e-2)])
def test_open_interval_from_rindler(l, e1, e2):
    assert open_interval_via_rindler(l, e1, e2) == pytest.approx(open_interval_entropy(l, e1, e2), abs=1e-8)
    # finite circle: the chord length sin(pi l/L) L/pi replaces l
    L = 10 * l
    chord = L / math.pi * math.sin(math.pi * l / L)
    assert open_interval_via_rindler(l, e1, e2, L) == pytest.approx(open_interval_entropy(chord, e1, e2),
                                                                    abs=1e-12)


def test_open_interval_errors():
    with pytest.raises(DomainError):
        open_interval_entropy(0.0, 1e-2, 1e-2)
    with pytest.raises(DomainError):
        open_interval_via_rindler(2.0, 1e-2, 1e-2, L=1.0)


def test_report_json_and_sweep_csv(tmp_path):
    m = ThermalTrajectory(1.0)
    rep = entropy_report(m, IntervalSpec(0.0, 2.0))
    text = to_json(rep)
    assert '"renormalized"' in text and '"raw"' in text
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rows = entropy_sweep(m, 0.0, [0.5, 1.0, 2.0])
    out = write_sweep_csv(rows, tmp_path / "e.csv")
    assert out.splitlines()[0] == "x2,entropy,renormalized_entropy"
    assert (tmp_path / "e.csv").read_text() == out
    assert len(out.splitlines()) == 4
