"""Entanglement entropy of single intervals at future null infinity.

The raw entropy of [x1, x2] with endpoint cutoffs eps1, eps2 is

    S = (1/12) ln[(f2 - f1)^2 / (f'(x2) f'(x1) eps1 eps2)],

and the renormalized entropy subtracts the same interval in the inertial
vacuum, replacing eps1 * eps2 by (x2 - x1)^2.  For three adjacent blocks the
strong-subadditivity combination of raw entropies reduces to a cross-ratio
in which all cutoffs and all derivatives cancel.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit, log_expit

from .errors import DomainError
from .trajectory import NullRayMap, Trajectory


@dataclass(frozen=True)
class IntervalSpec:
    x1: float
    x2: float
    eps1: float = 1e-2
    eps2: float = 1e-2

    def __post_init__(self):
        if not self.x1 < self.x2:
            raise DomainError(f"interval needs x1 < x2, got [{self.x1}, {self.x2}]")
        if not (self.eps1 > 0 and self.eps2 > 0):
            raise DomainError("cutoffs must be positive")
        if max(self.eps1, self.eps2) >= (self.x2 - self.x1) / 10:
            warnings.warn("cutoff is not small compared with the interval length", stacklevel=3)

    def shifted(self, c: float) -> "IntervalSpec":
        return IntervalSpec(self.x1 + c, self.x2 + c, self.eps1, self.eps2)

    def swapped(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return (self.x2, self.eps2), (self.x1, self.eps1)


@dataclass
class EntropyReport:
    spec: IntervalSpec
    trajectory: dict
    raw: float
    renormalized: float


@dataclass
class SsaReport:
    S_AB: float
    S_BC: float
    S_B: float
    S_ABC: float
    delta: float
    kind: str
    base: float
    l: float
    cross_ratio_delta: float
    inputs: dict = field(default_factory=dict)


def _endpoint_data(traj: NullRayMap, x1: float, x2: float):
    if x1 == x2:
        raise DomainError("coincident endpoints")
    f, f1, _, _ = traj.derivatives(np.array([x1, x2], dtype=float))
    return f, f1


def hlw_entropy(traj: NullRayMap, spec: IntervalSpec) -> float:
    f, f1 = _endpoint_data(traj, spec.x1, spec.x2)
    num = 2.0 * math.log(abs(f[1] - f[0]))
    den = math.log(f1[0]) + math.log(f1[1]) + math.log(spec.eps1) + math.log(spec.eps2)
    return (num - den) / 12.0


def hlw_entropy_in(traj: NullRayMap, spec: IntervalSpec) -> float:
    """Same interval with cutoffs carried to in-coordinates, eps+ = f' eps-."""
    f, f1 = _endpoint_data(traj, spec.x1, spec.x2)
    eps_in = f1[0] * spec.eps1 * f1[1] * spec.eps2
    return (2.0 * math.log(abs(f[1] - f[0])) - math.log(eps_in)) / 12.0


def renormalized_entropy(traj: NullRayMap, x1: float, x2: float) -> float:
    f, f1 = _endpoint_data(traj, x1, x2)
    # log of a ratio near 1 for short intervals; keep it in one log
    ratio = ((f[1] - f[0]) / (x2 - x1)) ** 2 / (f1[0] * f1[1])
    return math.log(ratio) / 12.0


def entropy_report(traj: Trajectory, spec: IntervalSpec) -> EntropyReport:
    return EntropyReport(spec, traj.describe(), hlw_entropy(traj, spec),
                         renormalized_entropy(traj, spec.x1, spec.x2))


def cross_ratio_delta(fvals) -> float:
    """(1/6) ln[(f2 - f0)(f3 - f1) / ((f2 - f1)(f3 - f0))] for four ordered images."""
    f0, f1, f2, f3 = (float(v) for v in fvals)
    # (f2-f0)(f3-f1) = (f2-f1)(f3-f0) + (f3-f2)(f1-f0): log1p keeps small excesses exact
    excess = (f3 - f2) * (f1 - f0) / ((f2 - f1) * (f3 - f0))
    return math.log1p(excess) / 6.0


def ssa_check(traj: NullRayMap, base: float, l: float, kind: str = "raw",
              eps: float | None = None) -> SsaReport:
    """S_AB + S_BC - S_B - S_ABC for A, B, C adjacent blocks of width ``l``."""
    if not l > 0:
        raise DomainError(f"block width must be positive, got {l}")
    if kind not in ("raw", "renormalized"):
        raise DomainError(f"kind must be 'raw' or 'renormalized', got {kind!r}")
    pts = base + l * np.arange(4.0)
    traj._check_domain(pts)
    eps = 1e-3 * l if eps is None else eps
    if kind == "raw":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            S = lambda i, j: hlw_entropy(traj, IntervalSpec(pts[i], pts[j], eps, eps))
    else:
        S = lambda i, j: renormalized_entropy(traj, pts[i], pts[j])
    s_ab, s_bc, s_b, s_abc = S(0, 2), S(1, 3), S(1, 2), S(0, 3)
    delta = s_ab + s_bc - s_b - s_abc
    fvals = traj.derivatives(pts)[0]
    closed = cross_ratio_delta(fvals)
    if kind == "renormalized":
        # the widths 2l, 2l, l, 3l leave (1/6) ln(3/4) behind
        closed += math.log(0.75) / 6.0
    return SsaReport(s_ab, s_bc, s_b, s_abc, delta, kind, float(base), float(l), closed,
                     {"trajectory": traj.describe(), "eps": eps if kind == "raw" else None})


class StepProfile(NullRayMap):
    """Smooth increasing map with f(base) = 0 and f(base + l) = eps.

    Slope eps / l on the first block, then a logistic switch centred at
    base + 1.5 l raises the slope to 1.  The first block is squeezed to a
    sliver of in-coordinate length, which is what breaks subadditivity of
    the renormalized entropy.
    """

    kind = "user-defined"

    def __init__(self, base: float, l: float, eps: float):
        super().__init__()
        if not (l > 0 and 0 < eps < l):
            raise DomainError("need l > 0 and 0 < eps < l")
        self.base, self.l, self.eps = float(base), float(l), float(eps)

    def _derivs(self, x):
        slope = self.eps / self.l
        k = 40.0 / self.l
        z = k * (x - self.base - 1.5 * self.l)
        s = expit(z)
        # softplus(z) / k, shifted so that f(base) = 0
        rise = (log_expit(1.5 * k * self.l) - log_expit(-z)) / k
        f = slope * (x - self.base) + (1 - slope) * rise
        f1 = slope + (1 - slope) * s
        f2 = (1 - slope) * k * s * (1 - s)
        f3 = (1 - slope) * k**2 * s * (1 - s) * (1 - 2 * s)
        return f, f1, f2, f3


def appendix2_counterexample(eps: float = 1e-6, l: float = 1.0, base: float = 0.0) -> SsaReport:
    """Renormalized SSA combination on a map that squeezes the first block."""
    return ssa_check(StepProfile(base, l, eps), base, l, kind="renormalized")


def rindler_entropy(x1: float, x2: float) -> float:
    """(1/6) ln(x2 / x1): thermal entropy density pi T / 3 in Rindler time."""
    if not (0 < x1 and 0 < x2):
        raise DomainError("Rindler coordinates must be positive")
    return math.log(x2 / x1) / 6.0


def open_interval_entropy(l: float, eps1: float, eps2: float) -> float:
    """(1/12) ln(l^2 / (eps1 eps2)) for an interval of length ``l`` in open space."""
    if not (l > 0 and eps1 > 0 and eps2 > 0):
        raise DomainError("length and cutoffs must be positive")
    return math.log(l * l / (eps1 * eps2)) / 12.0


def open_interval_via_rindler(l: float, eps1: float, eps2: float, L: float | None = None) -> float:
    """Interval entropy rebuilt from the Rindler form on a circle of size ``L``.

    The interval [0, l] on a circle of circumference L maps to the wedge
    [eps_o, L_o] with eps_o = (pi/L) eps2 / sin(pi l/L) and
    L_o = (L / pi eps1) sin(pi l/L).  The wedge value counts both movers;
    one chiral sector carries half of it.  As L grows this tends to
    ``open_interval_entropy(l, eps1, eps2)``.
    """
    if not (l > 0 and eps1 > 0 and eps2 > 0):
        raise DomainError("length and cutoffs must be positive")
    L = 1e8 * l if L is None else float(L)
    if not L > l:
        raise DomainError("circumference must exceed the interval")
    sn = math.sin(math.pi * l / L)
    eps_o = math.pi / L * eps2 / sn
    L_o = L / (math.pi * eps1) * sn
    return 0.5 * rindler_entropy(eps_o, L_o)


def entropy_sweep(traj: Trajectory, x1: float, x2_values, eps: float = 1e-2):
    """Rows (x2, raw, renormalized) for a fixed left endpoint."""
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for x2 in np.asarray(x2_values, dtype=float):
            spec = IntervalSpec(x1, float(x2), eps, eps)
            rows.append((x2, hlw_entropy(traj, spec), renormalized_entropy(traj, x1, float(x2))))
    return rows


def write_sweep_csv(rows, path: str | Path | None = None, meta=()) -> str:
    from .io import format_csv

    text = format_csv(["x2", "entropy", "renormalized_entropy"], rows, meta=meta)
    if path is not None:
        Path(path).write_text(text)
    return text
