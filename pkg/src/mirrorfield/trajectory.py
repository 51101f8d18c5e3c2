"""Mirror trajectories x+ = f(x-) and other monotone null-ray maps.

Every map exposes ``derivatives(x)`` returning ``(f, f', f'', f''')``.  The
built-in trajectories carry closed-form derivatives written in terms of
logistic functions so that ``|kappa * x|`` up to ~700 neither overflows nor
loses the small tails that control the flux.

Built-ins::

    thermal:  f(x) = -(1/k) log(1 + exp(-k x))
    pulse:    f(x) = -(1/k) log[(1 + exp(-k x)) / (1 + exp(k (x - h)))]
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq
from scipy.special import expit

from .errors import DomainError, MonotonicityError, NonConvergenceError

INVERT_TOL = 1e-12


def _softplus(z):
    return np.logaddexp(0.0, z)


class NullRayMap:
    """A strictly increasing map of a light-cone coordinate.

    Subclasses implement ``_derivs`` on arrays already checked against the
    domain.  ``kinks`` lists points where the second derivative jumps.
    """

    kind = "abstract"
    kinks: tuple[float, ...] = ()

    def __init__(self, domain: tuple[float, float] = (-math.inf, math.inf)):
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise DomainError(f"empty domain ({lo}, {hi})")
        self.domain = (lo, hi)

    # -- evaluation -------------------------------------------------------
    def _derivs(self, x: np.ndarray):
        raise NotImplementedError

    def _in_domain(self, x):
        lo, hi = self.domain
        ok_lo = (x >= lo) if math.isfinite(lo) else (x > lo)
        ok_hi = (x <= hi) if math.isfinite(hi) else (x < hi)
        return ok_lo & ok_hi & np.isfinite(x)

    def _check_domain(self, x):
        x = np.asarray(x, dtype=float)
        bad = ~self._in_domain(x)
        if np.any(bad):
            first = np.atleast_1d(x)[np.atleast_1d(bad)][0]
            raise DomainError(f"{first!r} outside domain {self.domain} of {self.kind} map")
        return x

    def derivatives(self, x):
        """Return ``(f, f', f'', f''')`` at ``x`` (scalar or array)."""
        x = self._check_domain(x)
        f0, f1, f2, f3 = self._derivs(x)
        if np.any(f1 <= 0):
            raise MonotonicityError(f"non-monotone {self.kind} map: f' <= 0 at some evaluation point")
        return f0, f1, f2, f3

    def eval(self, x, order: int = 0):
        if order not in (0, 1, 2, 3):
            raise DomainError(f"derivative order must be 0..3, got {order}")
        out = self.derivatives(x)[order]
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, x):
        return self.eval(x, 0)

    # -- inversion ----------------------------------------------------------
    def value_range(self) -> tuple[float, float]:
        """Open range of f over the domain (limits, possibly infinite)."""
        lo, hi = self.domain
        return (self._limit(lo), self._limit(hi))

    def _limit(self, x):
        if math.isinf(x):
            return x
        return float(self._derivs(np.asarray(x, dtype=float))[0])

    def _bracket(self, xp: float) -> tuple[float, float]:
        lo, hi = self.domain
        a = lo if math.isfinite(lo) else -1.0
        b = hi if math.isfinite(hi) else 1.0
        step = 1.0
        while self._derivs(np.asarray(a))[0] > xp:
            if math.isfinite(lo):
                break
            step *= 2.0
            a -= step
        step = 1.0
        while self._derivs(np.asarray(b))[0] < xp:
            if math.isfinite(hi):
                break
            step *= 2.0
            b += step
        return a, b

    def _invert_scalar(self, xp: float, tol: float) -> float:
        rlo, rhi = self.value_range()
        lo, hi = self.domain
        ok_lo = xp >= rlo if math.isfinite(lo) else xp > rlo
        ok_hi = xp <= rhi if math.isfinite(hi) else xp < rhi
        if not (ok_lo and ok_hi and math.isfinite(xp)):
            raise DomainError(f"x+={xp!r} outside range ({rlo}, {rhi}) of {self.kind} map")
        a, b = self._bracket(xp)
        fn = lambda x: float(self._derivs(np.asarray(x))[0]) - xp
        try:
            root = brentq(fn, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        except ValueError as exc:
            raise DomainError(f"x+={xp!r} not bracketed in [{a}, {b}]") from exc
        if abs(fn(root)) > tol * max(1.0, abs(xp)):
            raise NonConvergenceError(f"inversion residual {fn(root):.3e} at x+={xp!r}")
        return root

    def invert(self, x_plus, tol: float = INVERT_TOL):
        """Solve f(g) = x_plus for g (scalar or array)."""
        xp = np.asarray(x_plus, dtype=float)
        if xp.ndim == 0:
            return self._invert_scalar(float(xp), tol)
        return np.array([self._invert_scalar(float(v), tol) for v in xp.ravel()]).reshape(xp.shape)

    def describe(self) -> dict:
        return {"kind": self.kind, "domain": list(self.domain)}


class Trajectory(NullRayMap):
    """A mirror trajectory; carries the inverse-length scale ``kappa``."""

    def __init__(self, kappa: float = 1.0, h: float | None = None,
                 domain: tuple[float, float] = (-math.inf, math.inf)):
        if not kappa > 0:
            raise DomainError(f"kappa must be positive, got {kappa}")
        super().__init__(domain)
        self.kappa = float(kappa)
        self.h = None if h is None else float(h)

    def describe(self) -> dict:
        d = super().describe()
        d["kappa"] = self.kappa
        if self.h is not None:
            d["h"] = self.h
        return d


class ThermalTrajectory(Trajectory):
    """Mirror at rest in the far past that approaches the null ray x+ = 0."""

    kind = "thermal"

    def _derivs(self, x):
        k = self.kappa
        s = expit(-k * x)  # f'
        t = expit(k * x)  # 1 - f'
        f0 = -_softplus(-k * x) / k
        return f0, s, -k * s * t, k * k * s * t * (t - s)

    def value_range(self):
        return (-math.inf, 0.0)

    def _invert_scalar(self, xp, tol):
        # closed form g(x+) = -(1/k) log(exp(-k x+) - 1)
        if not xp < 0 or not math.isfinite(xp):
            raise DomainError(f"x+={xp!r} outside range (-inf, 0) of thermal trajectory")
        k = self.kappa
        z = -k * xp
        if z > 1.0:
            return xp - math.log1p(-math.exp(-z)) / k
        return -math.log(math.expm1(z)) / k


class PulseTrajectory(Trajectory):
    """Mirror that radiates for a duration ~h and then returns to rest."""

    kind = "pulse"

    def __init__(self, kappa: float = 1.0, h: float = 50.0):
        if not h > 0:
            raise DomainError(f"pulse duration h must be positive, got {h}")
        super().__init__(kappa, h)

    def _derivs(self, x):
        k, h = self.kappa, self.h
        s1, t1 = expit(-k * x), expit(k * x)
        s2, t2 = expit(k * (x - h)), expit(-k * (x - h))
        f0 = (_softplus(k * (x - h)) - _softplus(-k * x)) / k
        f1 = s1 + s2
        f2 = k * (s2 * t2 - s1 * t1)
        f3 = k * k * (s1 * t1 * (t1 - s1) + s2 * t2 * (t2 - s2))
        return f0, f1, f2, f3

    def _bracket(self, xp):
        # x - h <= f(x) <= x
        return xp - 1.0, xp + self.h + 1.0


class InertialTrajectory(Trajectory):
    """Uniform motion f(x) = slope * x + offset; slope 1 is the mirror at rest."""

    kind = "identity"

    def __init__(self, slope: float = 1.0, offset: float = 0.0):
        if not slope > 0:
            raise MonotonicityError(f"slope must be positive, got {slope}")
        super().__init__(1.0)
        self.slope, self.offset = float(slope), float(offset)
        if slope != 1.0 or offset != 0.0:
            self.kind = "inertial"

    def _derivs(self, x):
        z = np.zeros_like(x)
        return self.slope * x + self.offset, z + self.slope, z, z

    def _invert_scalar(self, xp, tol):
        return (xp - self.offset) / self.slope


def _fd_derivs(func: Callable, x: np.ndarray, step: float):
    # 7-point central stencils, O(step^6) for f' and f'', O(step^4) for f'''
    hs = step
    fm3, fm2, fm1 = func(x - 3 * hs), func(x - 2 * hs), func(x - hs)
    fp1, fp2, fp3 = func(x + hs), func(x + 2 * hs), func(x + 3 * hs)
    f0 = func(x)
    d1 = (-fm3 + 9 * fm2 - 45 * fm1 + 45 * fp1 - 9 * fp2 + fp3) / (60 * hs)
    d2 = (2 * fm3 - 27 * fm2 + 270 * fm1 - 490 * f0 + 270 * fp1 - 27 * fp2 + 2 * fp3) / (180 * hs**2)
    d3 = (fm3 - 8 * fm2 + 13 * fm1 - 13 * fp1 + 8 * fp2 - fp3) / (8 * hs**3)
    return f0, d1, d2, d3


class FunctionTrajectory(Trajectory):
    """User-supplied callable; derivatives analytic when given, else finite differences."""

    kind = "user-defined"

    def __init__(self, func: Callable, derivatives: Sequence[Callable] | None = None,
                 domain: tuple[float, float] = (-math.inf, math.inf), kappa: float = 1.0,
                 fd_step: float | None = None, kinks: Sequence[float] = ()):
        super().__init__(kappa, domain=domain)
        self.func = func
        self.derivs_fn = None if derivatives is None else tuple(derivatives)
        if self.derivs_fn is not None and len(self.derivs_fn) != 3:
            raise ValueError("derivatives must be (f', f'', f''')")
        self.fd_step = fd_step if fd_step is not None else 1e-3 / self.kappa
        self.kinks = tuple(float(k) for k in kinks)

    def _derivs(self, x):
        if self.derivs_fn is not None:
            d1, d2, d3 = self.derivs_fn
            return self.func(x), d1(x), d2(x), d3(x)
        return _fd_derivs(self.func, x, self.fd_step)


class TableTrajectory(Trajectory):
    """Sampled (x-, x+) pairs joined by monotone cubic (PCHIP) interpolation."""

    kind = "user-defined"

    def __init__(self, x_minus, x_plus, kappa: float = 1.0, source: str | None = None):
        xm = np.asarray(x_minus, dtype=float)
        xp = np.asarray(x_plus, dtype=float)
        if xm.ndim != 1 or xm.shape != xp.shape or xm.size < 2:
            raise DomainError("trajectory table needs two equal-length columns with >= 2 rows")
        if np.any(np.diff(xm) <= 0):
            raise DomainError("x- column must be strictly increasing")
        if np.any(np.diff(xp) <= 0):
            raise MonotonicityError("x+ column must be strictly increasing (monotone trajectory)")
        super().__init__(kappa, domain=(xm[0], xm[-1]))
        self.x_minus, self.x_plus = xm, xp
        self.source = source
        slopes = PchipInterpolator(xm, xp).derivative()(xm)
        # the one-sided end formula can clamp to zero; fall back to the secant
        secant = np.diff(xp) / np.diff(xm)
        if slopes[0] <= 0:
            slopes[0] = secant[0]
        if slopes[-1] <= 0:
            slopes[-1] = secant[-1]
        self._p = CubicHermiteSpline(xm, xp, slopes, extrapolate=False)
        self._dp = [self._p.derivative(n) for n in (1, 2, 3)]
        self.kinks = tuple(xm[1:-1])

    def _derivs(self, x):
        return self._p(x), self._dp[0](x), self._dp[1](x), self._dp[2](x)

    def _bracket(self, xp):
        return self.domain

    def describe(self):
        d = super().describe()
        d["rows"] = int(self.x_minus.size)
        if self.source:
            d["source"] = self.source
        return d


def load_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a whitespace-separated two-column table; '#' lines are comments."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DomainError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 2:
        raise DomainError(f"{path}: need at least two data rows")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]


def load_trajectory(path: str | Path, kappa: float = 1.0) -> TableTrajectory:
    xm, xp = load_table(path)
    return TableTrajectory(xm, xp, kappa=kappa, source=str(path))


def mobius(a: float, b: float, c: float, d: float,
           domain: tuple[float, float] | None = None) -> FunctionTrajectory:
    """F(x) = (a + b x) / (c + d x) on a pole-free interval; increasing iff bc - ad > 0."""
    det = b * c - a * d
    if det <= 0:
        raise MonotonicityError("Mobius map (a + bx)/(c + dx) is increasing only when bc - ad > 0")
    if domain is None:
        if d == 0:
            domain = (-math.inf, math.inf)
        else:
            pole = -c / d
            domain = (pole, math.inf) if d * 1.0 > 0 else (-math.inf, pole)
    lo, hi = domain
    if d != 0 and lo < -c / d < hi:
        raise DomainError("Mobius pole inside requested domain")
    return FunctionTrajectory(
        lambda x: (a + b * x) / (c + d * x),
        (lambda x: det / (c + d * x) ** 2,
         lambda x: -2 * d * det / (c + d * x) ** 3,
         lambda x: 6 * d * d * det / (c + d * x) ** 4),
        domain=domain,
    )


def make_trajectory(kind: str, kappa: float = 1.0, h: float = 50.0,
                    table: str | Path | None = None) -> Trajectory:
    kind = kind.lower()
    if kind in ("thermal", "builtin-thermal"):
        return ThermalTrajectory(kappa)
    if kind in ("pulse", "builtin-pulse"):
        return PulseTrajectory(kappa, h)
    if kind in ("identity", "inertial", "rest"):
        return InertialTrajectory()
    if kind in ("table", "user", "user-defined"):
        if table is None:
            raise DomainError("user-defined trajectory needs a table path")
        return load_trajectory(table, kappa)
    raise DomainError(f"unknown trajectory kind {kind!r}")


def random_monotone_trajectory(rng: np.random.Generator, n_knots: int = 12,
                               span: float = 10.0) -> TableTrajectory:
    """Cumulative sums of positive random increments joined by PCHIP.

    Increments are log-uniform over four decades so the random maps include
    strongly stretched and compressed stretches.
    """
    dx = rng.uniform(0.2, 1.0, n_knots - 1)
    xm = np.concatenate([[0.0], np.cumsum(dx)])
    xm = xm * (span / xm[-1]) - span / 2
    dy = 10.0 ** rng.uniform(-2, 2, n_knots - 1)
    xp = np.concatenate([[0.0], np.cumsum(dy)])
    return TableTrajectory(xm, xp)
