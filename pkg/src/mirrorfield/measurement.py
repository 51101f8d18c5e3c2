"""One-bit measurements of a windowed field and the flux they condition.

The measured observable is X = int lambda(x) d_x phi(x) dx for a real
window lambda vanishing outside a compact support.  The one-bit operators
M0 = cos X and M1 = sin X satisfy M0^dag M0 + M1^dag M1 = 1, and the
correlation of Pi_i = M_i^dag M_i with the flux at a point x+ right of the
support is

    <Pi_i T(x+)> = 2 (-1)^(i+1) C(x+)^2,   C(x+) = int G(x+ - x') lambda(x') dx',

with G(d) = -1 / (4 pi d^2).  For a Gaussian vacuum the exact value carries
an extra factor exp(-2 <X^2>); ``damped=True`` includes it.
"""
from __future__ import annotations

import math
import warnings
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.special import roots_legendre

from .errors import DomainError, NonConvergenceError
from .stress_tensor import flux
from .trajectory import NullRayMap, load_table

GL_START = 256
GL_MAX = 8192
GL_RTOL = 1e-9


@dataclass(frozen=True)
class MeasurementWindow:
    """Real coupling ``shape`` on [s_lo, s_hi]; ``x_E`` bounds the region from the right."""

    s_lo: float
    s_hi: float
    shape: Callable
    slope: Callable | None = None
    x_E: float | None = None
    label: str = "custom"

    def __post_init__(self):
        if not self.s_lo < self.s_hi:
            raise DomainError(f"empty window support [{self.s_lo}, {self.s_hi}]")
        if self.x_E is None:
            object.__setattr__(self, "x_E", float(self.s_hi))
        if self.x_E < self.s_hi:
            raise DomainError("window support must lie left of x_E")
        ends = np.asarray(self.shape(np.array([self.s_lo, self.s_hi])), dtype=float)
        if np.any(np.abs(ends) > 1e-12 * max(1.0, self.peak())):
            raise DomainError("window must vanish at both ends of its support")

    @property
    def width(self) -> float:
        return self.s_hi - self.s_lo

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.s_lo) & (x < self.s_hi)
        out = np.where(inside, self.shape(np.clip(x, self.s_lo, self.s_hi)), 0.0)
        return float(out) if out.ndim == 0 else out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.slope is not None:
            return np.where((x > self.s_lo) & (x < self.s_hi), self.slope(x), 0.0)
        h = 1e-6 * self.width
        return (self(x + h) - self(x - h)) / (2 * h)

    def peak(self) -> float:
        xs = np.linspace(self.s_lo, self.s_hi, 257)
        return float(np.max(np.abs(self.shape(xs))))

    def is_zero(self) -> bool:
        return self.peak() == 0.0


def bump_window(s_lo: float, s_hi: float, amplitude: float = 1.0,
                x_E: float | None = None) -> MeasurementWindow:
    """Smooth compact bump amplitude * exp(1 - 1/(1 - t^2)), t mapped onto (-1, 1)."""
    mid, half = 0.5 * (s_lo + s_hi), 0.5 * (s_hi - s_lo)

    def shape(x):
        t = (np.asarray(x, dtype=float) - mid) / half
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = amplitude * np.exp(1.0 - 1.0 / (1.0 - t * t))
        return np.where(np.abs(t) < 1, v, 0.0)

    def slope(x):
        t = (np.asarray(x, dtype=float) - mid) / half
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = shape(x) * (-2 * t / (1 - t * t) ** 2) / half
        return np.where(np.abs(t) < 1, v, 0.0)

    return MeasurementWindow(float(s_lo), float(s_hi), shape, slope, x_E, "bump")


def zero_window(s_lo: float = -2.0, s_hi: float = -1.0) -> MeasurementWindow:
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return MeasurementWindow(s_lo, s_hi, zero, zero, None, "zero")


def load_window(path: str | Path, x_E: float | None = None) -> MeasurementWindow:
    """Window from a two-column (x, lambda) table, monotone-cubic interpolated."""
    x, lam = load_table(path)
    if np.any(np.diff(x) <= 0):
        raise DomainError("window table needs strictly increasing x")
    if abs(lam[0]) > 0 or abs(lam[-1]) > 0:
        raise DomainError("tabulated window must be zero at its first and last rows")
    interp = PchipInterpolator(x, lam)
    return MeasurementWindow(float(x[0]), float(x[-1]), interp, interp.derivative(),
                             x_E, f"table:{path}")


def random_window(rng: np.random.Generator, lo: float = -10.0, hi: float = -1.0) -> MeasurementWindow:
    """Sum of 1 to 3 random bumps inside [lo, hi] (right end is x_E)."""
    n = int(rng.integers(1, 4))
    parts = []
    for _ in range(n):
        a, b = np.sort(rng.uniform(lo, hi, 2))
        if b - a < 0.05 * (hi - lo):
            b = min(hi, a + 0.05 * (hi - lo))
            a = b - 0.05 * (hi - lo)
        parts.append(bump_window(a, b, float(rng.normal())))
    s_lo = min(p.s_lo for p in parts)
    s_hi = max(p.s_hi for p in parts)
    shape = lambda x: sum(p(x) for p in parts)
    slope = lambda x: sum(p.derivative(x) for p in parts)
    return MeasurementWindow(s_lo, s_hi, shape, slope, hi, "random")


def vacuum_correlator(x, y, eta: float | None = None):
    """-1 / (4 pi (x - y - i eta)^2); real when ``eta`` is 0."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if np.any(d == 0):
        raise DomainError("correlator requested at coincident points")
    if eta is None:
        eta = 1e-8 * np.abs(d)
    if np.all(np.asarray(eta) == 0):
        out = -1.0 / (4 * math.pi * d * d)
    else:
        out = -1.0 / (4 * math.pi * (d - 1j * np.asarray(eta)) ** 2)
    return out.item() if np.ndim(out) == 0 else out


def transported_correlator(traj: NullRayMap, x, y):
    """Out-field correlator f'(x) f'(y) G(f(x) - f(y)) at separated points."""
    fx, f1x, _, _ = traj.derivatives(x)
    fy, f1y, _, _ = traj.derivatives(y)
    out = f1x * f1y * vacuum_correlator(fx, fy, eta=0.0)
    return float(out) if np.ndim(out) == 0 else out


def thermal_correlator(delta, kappa: float = 1.0):
    """-kappa^2 / (16 pi sinh^2(kappa delta / 2))."""
    s = np.sinh(0.5 * kappa * np.asarray(delta, dtype=float))
    return -(kappa**2) / (16 * math.pi * s * s)


@lru_cache(maxsize=None)
def _gl_nodes(n: int):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _gl_integrate(func: Callable, lo: float, hi: float):
    """Gauss-Legendre over [lo, hi], nodes doubled until the relative change < GL_RTOL.

    ``func`` maps node array (n,) to values (n,) or (n, m); returns (m,) or scalar.
    """
    prev = None
    n = GL_START
    while n <= GL_MAX:
        x, w = _gl_nodes(n)
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        vals = np.asarray(func(half * x + mid))
        cur = half * np.tensordot(w, vals, axes=(0, 0))
        if prev is not None:
            scale = np.max(np.abs(cur))
            if scale == 0 or np.max(np.abs(cur - prev)) <= GL_RTOL * scale:
                return cur
        prev = cur
        n *= 2
    raise NonConvergenceError("window quadrature did not settle")


def window_overlap(window: MeasurementWindow, x_plus) -> np.ndarray:
    """C(x+) = int G(x+ - x') lambda(x') dx' for points right of the support."""
    xp = np.atleast_1d(np.asarray(x_plus, dtype=float))
    if np.any(xp <= window.s_hi):
        raise DomainError("x_plus lies inside or left of the window support")
    return _gl_integrate(
        lambda y: window(y)[:, None] * vacuum_correlator(xp[None, :], y[:, None], eta=0.0),
        window.s_lo, window.s_hi)


def window_variance(window: MeasurementWindow, traj: NullRayMap | None = None) -> float:
    """<X^2> = -(1/4 pi) int int lambda'(x) lambda'(y) ln|F(x) - F(y)| dx dy.

    ``F`` is the identity, or the trajectory when the window sits in the
    x- coordinate and the field is the transported out-field.
    """
    if window.is_zero():
        return 0.0
    lo, hi = window.s_lo, window.s_hi
    lam1 = lambda y: float(window.derivative(y))

    def log_ratio(x, fx, f1x):
        # ln[(F(x) - F(y)) / (x - y)], smooth through y = x
        if traj is None:
            return lambda y: 0.0

        def g(y):
            if abs(y - x) < 1e-7 * (hi - lo):
                return math.log(f1x)
            return math.log((fx - float(traj.derivatives(y)[0])) / (x - y))

        return g

    def inner(x):
        # the ln|x - y| singularity goes into QUADPACK's algebraic-log weights
        fx, f1x = (x, 1.0) if traj is None else (float(v) for v in traj.derivatives(x)[:2])
        smooth = log_ratio(x, fx, f1x)
        total = 0.0
        if x > lo:
            total += integrate.quad(lam1, lo, x, weight="alg-logb", wvar=(0, 0), limit=200)[0]
        if x < hi:
            total += integrate.quad(lam1, x, hi, weight="alg-loga", wvar=(0, 0), limit=200)[0]
        if traj is not None:
            total += integrate.quad(lambda y: lam1(y) * smooth(y), lo, hi, points=[x], limit=200,
                                    epsabs=0.0, epsrel=1e-10)[0]
        return total

    xs, ws = np.polynomial.legendre.leggauss(96)
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    nodes = half * xs + mid
    vals = np.array([float(window.derivative(x)) * inner(float(x)) for x in nodes])
    var = -half * float(np.dot(ws, vals)) / (4 * math.pi)
    if var < 0:
        raise NonConvergenceError(f"negative window variance {var:.3e}")
    return var


def povm_weights(window: MeasurementWindow, traj: NullRayMap | None = None) -> tuple[float, float]:
    """(<Pi_0>, <Pi_1>) = ((1 + e^{-2 v}) / 2, (1 - e^{-2 v}) / 2), v the window variance."""
    damp = math.exp(-2.0 * window_variance(window, traj))
    return 0.5 * (1 + damp), 0.5 * (1 - damp)


def _check_outcome(outcome: int) -> int:
    if outcome not in (0, 1):
        raise DomainError(f"outcome must be 0 or 1, got {outcome}")
    return outcome


def one_bit_flux(window: MeasurementWindow, outcome: int, x_plus, damped: bool = False):
    """<Pi_outcome T(x+)> right of the window."""
    sign = 1.0 if _check_outcome(outcome) == 1 else -1.0
    c = window_overlap(window, x_plus)
    out = 2.0 * sign * c * c
    if damped:
        out = out * math.exp(-2.0 * window_variance(window))
    return float(out[0]) if np.ndim(x_plus) == 0 else out


def unitarity_sum_check(window: MeasurementWindow, x_plus):
    """Sum over both outcomes of the conditioned flux; vanishes identically."""
    total = one_bit_flux(window, 0, x_plus) + one_bit_flux(window, 1, x_plus)
    return total


@dataclass
class ConditionedFlux:
    outcome: int
    grid: np.ndarray
    values: np.ndarray


def conditioned_sweep(window: MeasurementWindow, x_plus, damped: bool = False):
    xp = np.asarray(x_plus, dtype=float)
    return (ConditionedFlux(0, xp, one_bit_flux(window, 0, xp, damped)),
            ConditionedFlux(1, xp, one_bit_flux(window, 1, xp, damped)))


def sweep_csv(sweep, path: str | Path | None = None, meta=()) -> str:
    from .io import format_csv

    c0, c1 = sweep
    text = format_csv(["x_plus", "flux_outcome0", "flux_outcome1"],
                      np.column_stack([c0.grid, c0.values, c1.values]), meta=meta)
    if path is not None:
        Path(path).write_text(text)
    return text


def decay_slope(window: MeasurementWindow, x_plus, origin: float | None = None) -> float:
    """Least-squares slope of log|flux| against log(x+ - origin), origin defaulting to x_E."""
    xp = np.asarray(x_plus, dtype=float)
    origin = window.x_E if origin is None else origin
    vals = np.abs(one_bit_flux(window, 1, xp))
    return float(np.polyfit(np.log(xp - origin), np.log(vals), 1)[0])


@dataclass
class GainReport:
    x_L: float
    x_L_plus: float
    gain_minus: float
    gain_plus: float
    outcome: int
    in_thermal_regime: bool
    notes: list[str] = field(default_factory=list)


def thermal_regime(traj: NullRayMap, window: MeasurementWindow, tol: float = 0.05) -> bool:
    """True when the flux over the window support is within ``tol`` of kappa^2 / 48 pi."""
    kappa = getattr(traj, "kappa", 1.0)
    xs = np.linspace(window.s_lo, window.s_hi, 33)
    plateau = kappa**2 / (48 * math.pi)
    try:
        vals = np.asarray(flux(traj, xs))
    except DomainError:
        return False
    return bool(np.all(np.abs(vals / plateau - 1) < tol))


def thermal_gain(traj: NullRayMap, window: MeasurementWindow, x_L, outcome: int = 1,
                 variance: float | None = None):
    """Flux gain at x_L- after outcome ``outcome`` of a one-bit measurement of ``window``.

    The window lives in x- on the out side.  The numerator is the exact
    Gaussian one-bit correlation with the transported out correlator and the
    denominator the outcome probability, so the result does not depend on
    the window amplitude to leading order.  Returns (gain_minus, gain_plus)
    with gain_plus = gain_minus / f'(x_L)^2.
    """
    sign = 1.0 if _check_outcome(outcome) == 1 else -1.0
    xl = np.atleast_1d(np.asarray(x_L, dtype=float))
    if np.any(xl <= window.s_hi):
        raise DomainError("x_L must lie right of the window support")
    if not thermal_regime(traj, window):
        warnings.warn("window is outside the thermal regime of the trajectory", stacklevel=2)
    if window.is_zero():
        z = np.zeros_like(xl)
        return (0.0, 0.0) if np.ndim(x_L) == 0 else (z, z)
    c = _gl_integrate(lambda y: window(y)[:, None] * transported_correlator(traj, xl[None, :], y[:, None]),
                      window.s_lo, window.s_hi)
    v = window_variance(window, traj) if variance is None else variance
    damp = math.exp(-2.0 * v)
    prob = 0.5 * (1 - damp) if outcome == 1 else 0.5 * (1 + damp)
    gain_minus = 2.0 * sign * damp * c * c / prob
    f1 = traj.derivatives(xl)[1]
    gain_plus = gain_minus / (f1 * f1)
    if np.ndim(x_L) == 0:
        return float(gain_minus[0]), float(gain_plus[0])
    return gain_minus, gain_plus
