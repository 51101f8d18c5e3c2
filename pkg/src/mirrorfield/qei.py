"""Quantum energy inequality bounds on a measurement-induced negative shock.

For a sampling function xi >= 0 the smeared flux obeys

    Tr[H_xi rho] >= -(1/12 pi) int (d sqrt(xi))^2 dx.

With xi = 0 left of x_E and xi = 1 right of a shock at x_E + l, a shock of
energy -r E_fw must satisfy r E_fw <= inf (1/12 pi) int (d sqrt(xi))^2,
and the infimum 1/(12 pi l) comes from a linear sqrt(xi).  The squeezed
family below realizes such a shock exactly and fixes how much positive
energy the measurement must inject to produce it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.linalg import solve_banded

from .errors import DomainError, NonConvergenceError
from .stress_tensor import flux_delta, mollified_delta, total_energy
from .trajectory import NullRayMap

COEF = 1.0 / (12.0 * math.pi)


@dataclass
class SamplingFunction:
    """Sampled xi on [x_E, x_peak]; ``func`` (optional) allows refinement near the ends."""

    grid: np.ndarray
    values: np.ndarray
    func: Callable | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape or self.grid.size < 2:
            raise DomainError("grid and values must be matching arrays of length >= 2")
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        if np.any(self.values < 0):
            raise DomainError("sampling function must be nonnegative")
        if self.values[0] != 0.0 or self.values[-1] != 1.0:
            raise DomainError("sampling function needs xi(x_E) = 0 and xi(x_peak) = 1")

    @property
    def x_E(self) -> float:
        return float(self.grid[0])

    @property
    def length(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    @classmethod
    def from_callable(cls, func: Callable, x_E: float, x_peak: float, n: int = 257):
        grid = np.linspace(x_E, x_peak, n)
        vals = np.asarray(func(grid), dtype=float)
        return cls(grid, vals, func)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inner = np.interp(x, self.grid, np.sqrt(self.values)) ** 2
        return np.where(x <= self.grid[0], 0.0, np.where(x >= self.grid[-1], 1.0, inner))


def optimal_xi(x_E: float, l: float) -> Callable:
    return lambda x: np.clip((np.asarray(x, dtype=float) - x_E) / l, 0.0, 1.0) ** 2


def _discrete_action(grid, root):
    return float(np.sum(np.diff(root) ** 2 / np.diff(grid)))


def xi_energy_functional(xi: SamplingFunction, refinements: int = 12) -> float:
    """(1/12 pi) int (d sqrt(xi))^2 dx with sqrt(xi) piecewise linear on the grid.

    With a callable attached, the first cell is halved repeatedly.  The
    integral is declared divergent when two successive halvings each add more
    than 10% or when the added pieces stop shrinking (ratio > 0.9 twice).
    """
    grid = xi.grid
    root = np.sqrt(xi.values)
    value = _discrete_action(grid, root)
    if xi.func is None:
        return COEF * value
    pts, roots = list(grid), list(root)
    prev_inc, big, flat = None, 0, 0
    for _ in range(refinements):
        mid = 0.5 * (pts[0] + pts[1])
        fm = float(xi.func(mid))
        if fm < 0:
            raise DomainError("sampling function must be nonnegative")
        pts.insert(1, mid)
        roots.insert(1, math.sqrt(fm))
        new = _discrete_action(np.asarray(pts), np.asarray(roots))
        inc = new - value
        big = big + 1 if inc > 0.1 * value else 0
        flat = flat + 1 if (prev_inc is not None and prev_inc > 1e-14 * value
                            and inc > 0.9 * prev_inc) else 0
        if big >= 2 or flat >= 2:
            raise NonConvergenceError("xi functional diverges at the left endpoint")
        prev_inc, value = inc, new
    return COEF * value


def optimize_xi(x_E: float, x_peak: float, n_grid: int = 1024, method: str = "banded",
                max_iter: int = 20000):
    """Minimize the discrete functional over sqrt(xi) at interior nodes.

    ``method="banded"`` solves the tridiagonal stationarity equations;
    ``method="descent"`` runs conjugate-gradient descent as a cross-check.
    Returns (SamplingFunction, value).
    """
    if not x_E < x_peak:
        raise DomainError("need x_E < x_peak")
    if n_grid < 8:
        raise DomainError("n_grid must be at least 8")
    grid = np.linspace(x_E, x_peak, n_grid)
    w = 1.0 / np.diff(grid)
    m = n_grid - 2
    if method == "banded":
        ab = np.zeros((3, m))
        ab[0, 1:] = -w[1:-1]
        ab[1, :] = w[:-1] + w[1:]
        ab[2, :-1] = -w[1:-1]
        rhs = np.zeros(m)
        rhs[-1] = w[-1]
        inner = solve_banded((1, 1), ab, rhs)
    elif method == "descent":
        def full(u):
            return np.concatenate(([0.0], u, [1.0]))

        def fun(u):
            d = np.diff(full(u))
            return float(np.sum(w * d * d))

        def grad(u):
            d = w * np.diff(full(u))
            return 2 * (d[:-1] - d[1:])

        start = np.full(m, 0.5)
        res = optimize.minimize(fun, start, jac=grad, method="CG",
                                options={"maxiter": max_iter, "gtol": 1e-12})
        if not res.success and res.nit >= max_iter:
            raise NonConvergenceError(f"descent stopped after {res.nit} iterations")
        inner = res.x
    else:
        raise DomainError(f"unknown method {method!r}")
    root = np.concatenate(([0.0], inner, [1.0]))
    xi = SamplingFunction(grid, np.clip(root, 0.0, None) ** 2)
    return xi, COEF * _discrete_action(grid, root)


@dataclass
class BoundReport:
    E_fw: float
    r: float
    l: float
    bound_9: float
    satisfied: bool
    E_plus_lower: float
    E_tot_lower: float
    divergent: bool

    @property
    def saturation(self) -> float:
        return self.E_fw / self.bound_9


def firewall_bound(E_fw: float, r: float, l: float) -> BoundReport:
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    if not l > 0:
        raise DomainError(f"l must be positive, got {l}")
    if E_fw < 0:
        raise DomainError(f"E_fw must be nonnegative, got {E_fw}")
    bound = 1.0 / (12 * math.pi * r * l)
    x = 12 * math.pi * l * r * E_fw
    if x >= 1:
        e_plus = e_tot = math.inf
    else:
        e_plus = r * E_fw / (1 - x)
        e_tot = 12 * math.pi * l * (r * E_fw) ** 2 / (1 - x)
    return BoundReport(E_fw, r, l, bound, E_fw < bound, e_plus, e_tot, x >= 1)


class SqueezedProfile(NullRayMap):
    """Mobius map left of ``l`` joined C^1 to an affine map on the right.

    F(x) = (a + b(x-l)) / (c + d(x-l)) for x < l and a/c + s (x - l) beyond,
    s = (bc - ad) / c^2.  The constraint d = 12 pi r E_fw c makes the jump of
    F''/F' at l equal 24 pi r E_fw, a shock of energy -r E_fw.
    """

    kind = "squeezed"

    def __init__(self, a: float, b: float, c: float, d: float, l: float, r: float, E_fw: float):
        self.a, self.b, self.c, self.d = float(a), float(b), float(c), float(d)
        self.l, self.r, self.E_fw = float(l), float(r), float(E_fw)
        self.det = self.b * self.c - self.a * self.d
        if self.det <= 0:
            raise DomainError("parameters give a decreasing map (need bc - ad > 0)")
        pole = self.l - self.c / self.d if self.d != 0 else -math.inf
        if pole >= self.l:
            raise DomainError("Mobius pole lies right of the kink")
        if pole >= 0:
            raise DomainError("Mobius pole lies inside (0, l); need 12 pi l r E_fw < 1")
        super().__init__((pole, math.inf))
        self.kinks = (self.l,)

    @property
    def slope(self) -> float:
        return self.det / self.c**2

    def _left(self, x):
        den = self.c + self.d * (x - self.l)
        f = (self.a + self.b * (x - self.l)) / den
        f1 = self.det / den**2
        f2 = -2 * self.d * self.det / den**3
        f3 = 6 * self.d**2 * self.det / den**4
        return f, f1, f2, f3

    def _right(self, x):
        f = self.a / self.c + self.slope * (x - self.l)
        one = np.ones_like(x)
        return f, self.slope * one, 0.0 * one, 0.0 * one

    def _derivs(self, x):
        left, right = self._left(x), self._right(x)
        below = x < self.l
        return tuple(np.where(below, lv, rv) for lv, rv in zip(left, right))

    def one_sided(self, x: float, side: int):
        parts = self._left(np.float64(x)) if side < 0 else self._right(np.float64(x))
        return tuple(float(v) for v in parts)

    def describe(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b, "c": self.c, "d": self.d,
                "l": self.l, "r": self.r, "E_fw": self.E_fw}


def squeezed_profile(r: float, E_fw: float, l: float, c: float = 1.0,
                     gauge: tuple[float, float] | None = None) -> SqueezedProfile:
    """Squeezed-state map with its shock at ``l``.

    ``gauge = (F(l), F'(l))`` fixes the redundant Mobius normalization,
    defaulting to (l, 1): a = F(l) c and b = (F'(l) c^2 + a d) / c.
    """
    if c == 0:
        raise DomainError("c must be nonzero")
    if not (r > 0 and l > 0 and E_fw >= 0):
        raise DomainError("need r > 0, l > 0 and E_fw >= 0")
    if 12 * math.pi * l * r * E_fw >= 1:
        raise DomainError("12 pi l r E_fw >= 1 puts the Mobius pole inside (0, l)")
    F_l, slope = gauge if gauge is not None else (l, 1.0)
    if not slope > 0:
        raise DomainError("gauge slope F'(l) must be positive")
    d = 12 * math.pi * r * E_fw * c
    a = F_l * c
    b = (slope * c * c + a * d) / c
    return SqueezedProfile(a, b, c, d, l, r, E_fw)


@dataclass
class Appendix3Report:
    params: dict
    E_tot_quadrature: float
    E_tot_closed_form: float
    E_tot_residual: float
    delta_jump: float
    delta_expected: float
    delta_mollified: float | None
    E_plus: float
    E_plus_bound: float
    saturation_residual: float
    notes: list[str] = field(default_factory=list)


def mollified_shock(profile: SqueezedProfile, widths=(0.02, 0.01, 0.005)) -> float:
    """Richardson limit of the mollified shock energy; the error is linear in width."""
    w = np.asarray(widths, dtype=float) * profile.l
    vals = np.array([mollified_delta(profile, profile.l, float(x)) for x in w])
    coef = np.polyfit(w, vals, min(2, len(w) - 1))
    return float(coef[-1])


def verify_appendix3(profile: SqueezedProfile, mollify: bool = False) -> Appendix3Report:
    rE = profile.r * profile.E_fw
    x = 12 * math.pi * profile.l * rE
    closed = 12 * math.pi * profile.l * rE**2 / (1 - x)
    quad = total_energy(profile, (0.0, profile.l)) if rE > 0 else 0.0
    delta = flux_delta(profile, profile.l)
    e_plus = quad + rE
    bound = rE / (1 - x)
    res = abs(quad - closed) / closed if closed > 0 else abs(quad)
    sat = abs(e_plus - bound) / bound if bound > 0 else abs(e_plus)
    moll = mollified_shock(profile) if mollify else None
    return Appendix3Report(profile.describe(), quad, closed, res, delta, -rE, moll,
                           e_plus, bound, sat)


def scaled(report: BoundReport, s: float) -> BoundReport:
    """Bound for the configuration stretched by x -> s x (lengths times s, energies over s)."""
    return firewall_bound(report.E_fw / s, report.r, report.l * s)
