"""Acceptance checks reproducing the model's quantitative claims.

Each ``criterion_*`` function runs one check at its stated tolerance and
returns a :class:`CriterionResult`.  ``run_all`` drives them for the CLI
``selftest`` command and for the test suite.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import entropy, measurement, qei, spectrum, unruh
from .stress_tensor import flux, flux_delta
from .trajectory import InertialTrajectory, PulseTrajectory, ThermalTrajectory, random_monotone_trajectory

PLATEAU = 1.0 / (48.0 * math.pi)
SEED = 20240611


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = math.inf

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(number: int, name: str, budget: float):
    def wrap(fn):
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            passed, detail = fn()
            dt = time.perf_counter() - t0
            return CriterionResult(number, name, bool(passed), detail, dt, budget)

        run.number = number
        run.criterion_name = name
        return run

    return wrap


@_timed(1, "thermal plateau", 1.0)
def criterion_thermal_plateau():
    x = np.linspace(8.0, 12.0, 401)
    rel = np.abs(flux(ThermalTrajectory(1.0), x) / PLATEAU - 1)
    return rel.max() < 0.01, f"max relative deviation {rel.max():.2e} on [8, 12]"


@_timed(2, "inertial null flux", 1.0)
def criterion_inertial_null():
    x = np.linspace(-100.0, 100.0, 2001)
    worst = 0.0
    for m in (InertialTrajectory(), InertialTrajectory(slope=3.7, offset=-2.0)):
        worst = max(worst, float(np.max(np.abs(flux(m, x)))))
    return worst < 1e-12, f"max |flux| {worst:.1e}"


@_timed(3, "pulse shutoff", 1.0)
def criterion_pulse_shutoff():
    m = PulseTrajectory(1.0, 50.0)
    plateau_x = np.linspace(5.0, 45.0, 801)
    rel = np.abs(flux(m, plateau_x) / PLATEAU - 1)
    late = np.abs(flux(m, np.linspace(70.0, 200.0, 1301))).max()
    worst_at = plateau_x[int(rel.argmax())]
    ok = rel.max() < 0.01 and late < 1e-6
    return ok, (f"plateau max deviation {rel.max():.3g} at x={worst_at:.2f}; "
                f"late |flux| {late:.1e}")


@_timed(4, "Planck spectrum ratio", 60.0)
def criterion_planck_ratio():
    m = PulseTrajectory(1.0, 50.0)
    packet = spectrum.WavePacket(25.0, 10.0)
    n1 = spectrum.occupation(m, 0.5, packet)
    n2 = spectrum.occupation(m, 1.0, packet)
    target = math.expm1(2 * math.pi) / math.expm1(math.pi)
    ratio = n1 / n2
    return abs(ratio / target - 1) < 0.10, f"ratio {ratio:.4f} vs {target:.4f}"


@_timed(5, "raw SSA exactness", 5.0)
def criterion_ssa_raw():
    rng = np.random.default_rng(SEED)
    worst_neg, worst_diff = math.inf, 0.0
    for _ in range(1000):
        m = random_monotone_trajectory(rng)
        lo, hi = m.domain
        l = rng.uniform(0.02, 1.0) * (hi - lo) / 3
        base = rng.uniform(lo, hi - 3 * l)
        rep = entropy.ssa_check(m, base, l, "raw")
        worst_neg = min(worst_neg, rep.delta)
        worst_diff = max(worst_diff, abs(rep.delta - rep.cross_ratio_delta))
    ok = worst_neg >= -1e-12 and worst_diff <= 1e-12
    return ok, f"min delta {worst_neg:.3e}, max |delta - cross-ratio| {worst_diff:.1e}"


@_timed(6, "renormalized SSA violation", 1.0)
def criterion_ssa_renormalized():
    rep = entropy.appendix2_counterexample(eps=1e-6, l=1.0)
    target = math.log(0.75) / 6
    ok = abs(rep.delta - target) < 1e-3 and rep.delta < 0
    return ok, f"delta {rep.delta:.6f} vs {target:.6f}"


@_timed(7, "variational infimum", 5.0)
def criterion_variational():
    xi, value = qei.optimize_xi(0.0, 1.0, 1024)
    target = 1 / (12 * math.pi)
    shape = float(np.max(np.abs(xi.values - xi.grid**2)))
    ok = abs(value / target - 1) < 0.01 and shape < 1e-3
    return ok, f"value {value:.6f} vs {target:.6f}, shape error {shape:.1e}"


@_timed(8, "squeezed-state closed form", 10.0)
def criterion_appendix3():
    worst_e, worst_sat, worst_jump, worst_moll = 0.0, 0.0, 0.0, 0.0
    grid = [(r, frac, l, c) for r, l, c in ((1.0, 1.0, 1.0), (0.5, 2.0, -1.5))
            for frac in (0.01, 0.1, 0.3, 0.6, 0.9)]
    for r, frac, l, c in grid:
        E = frac / (12 * math.pi * r * l)
        p = qei.squeezed_profile(r, E, l, c)
        rep = qei.verify_appendix3(p)
        worst_e = max(worst_e, rep.E_tot_residual)
        worst_sat = max(worst_sat, rep.saturation_residual)
        worst_jump = max(worst_jump, abs(rep.delta_jump + r * E))
        moll = qei.mollified_shock(p)
        worst_moll = max(worst_moll, abs(moll / (-r * E) - 1))
    ok = worst_e < 1e-3 and worst_sat < 1e-3 and worst_jump < 1e-10 and worst_moll < 0.01
    return ok, (f"E_tot residual {worst_e:.1e}, saturation {worst_sat:.1e}, "
                f"jump error {worst_jump:.1e}, mollified error {worst_moll:.1e} over {len(grid)} points")


@_timed(9, "firewall bound classification", 1.0)
def criterion_bound_classification():
    r, l = 1.0, 1.0
    threshold = 1 / (12 * math.pi * r * l)
    sweep = threshold * np.array([0.0, 0.2, 0.5, 0.8, 0.9, 0.99, 0.999, 1.0, 1.01, 1.5])
    reps = [qei.firewall_bound(float(E), r, l) for E in sweep]
    flags = [rep.satisfied for rep in reps]
    below = [rep.E_plus_lower for rep in reps if rep.satisfied]
    flips_once = flags == sorted(flags, reverse=True) and flags[0] and not flags[-1]
    increasing = all(b > a for a, b in zip(below, below[1:]))
    diverges = all(math.isinf(rep.E_plus_lower) for rep in reps if not rep.satisfied)
    ok = flips_once and increasing and diverges and below[-1] > 100 * below[1]
    return ok, f"flip at E_fw/threshold = 1, E+ bound up to {below[-1]:.3g} before it"


@_timed(10, "measurement sum rule and decay", 30.0)
def criterion_measurement():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(100):
        w = measurement.random_window(rng)
        xp = np.array([0.0, 3.0, 30.0])
        f0 = measurement.one_bit_flux(w, 0, xp)
        total = measurement.unitarity_sum_check(w, xp)
        worst = max(worst, float(np.max(np.abs(total) / np.maximum(np.abs(f0), 1e-300))))
    slope = measurement.decay_slope(measurement.bump_window(-2.0, -1.0), np.geomspace(10, 1000, 40))
    ok = worst < 1e-10 and abs(slope + 4.0) <= 0.1
    return ok, f"max relative sum {worst:.1e}, decay slope {slope:.3f}"


@_timed(11, "thermal correlator and gain", 30.0)
def criterion_thermal_correlator():
    m = ThermalTrajectory(1.0)
    deltas = np.linspace(5.0, 20.0, 31)
    base = 10.0
    rel = np.abs(measurement.transported_correlator(m, base + deltas, base)
                 / measurement.thermal_correlator(deltas) - 1).max()
    window = measurement.bump_window(3.0, 5.0)
    xl = np.linspace(10.0, 25.0, 16)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        g_minus, g_plus = measurement.thermal_gain(m, window, xl)
    rate = float(np.polyfit(xl, np.log(np.abs(g_minus)), 1)[0])
    late = np.abs(g_plus[len(xl) // 2:])
    bounded = bool(np.all(np.isfinite(g_plus)) and late.max() / late.min() < 1.05)
    ok = rel < 0.01 and abs(rate / -2.0 - 1) < 0.05 and bounded
    return ok, (f"correlator deviation {rel:.1e}, gain exponent {rate:.4f}, "
                f"gain+ settles at {g_plus[-1]:.4g}")


@_timed(12, "Unruh limits", 1.0)
def criterion_unruh():
    gap = abs(unruh.mode_entropy(1.0, 1e6, 3) - math.log(4))
    resid = max(unruh.rescaling_invariance_check(w, a, s, N)
                for w, a in ((0.3, 1.0), (1.0, 7.5), (2.5, 0.4))
                for s in (2.0, 0.5) for N in (3, None))
    ok = gap < 1e-3 and resid < 1e-15
    return ok, f"|S - ln 4| {gap:.1e}, rescaling residual {resid:.1e}"


CRITERIA = [
    criterion_thermal_plateau,
    criterion_inertial_null,
    criterion_pulse_shutoff,
    criterion_planck_ratio,
    criterion_ssa_raw,
    criterion_ssa_renormalized,
    criterion_variational,
    criterion_appendix3,
    criterion_bound_classification,
    criterion_measurement,
    criterion_thermal_correlator,
    criterion_unruh,
]


def run_all(only=None, echo=print) -> list[CriterionResult]:
    results = []
    for crit in CRITERIA:
        if only and crit.number not in only:
            continue
        res = crit()
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
