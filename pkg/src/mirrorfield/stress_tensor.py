"""Energy flux of a null-ray map from the Schwarzian derivative.

For any C^3 increasing map F the vacuum flux is

    T(x) = -(1/24 pi) [F'''/F' - (3/2) (F''/F')^2],

and a kink where F' is continuous but F'' jumps carries a Dirac delta with
coefficient -(1/24 pi) * jump(F''/F').  Both pieces are exposed here,
together with the total-energy functional (1/48 pi) * integral (F''/F')^2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import DomainError, KinkError, NonConvergenceError
from .trajectory import NullRayMap

PREFACTOR = 1.0 / (24.0 * math.pi)
QUAD_RTOL = 1e-9


def schwarzian(f1, f2, f3):
    return f3 / f1 - 1.5 * (f2 / f1) ** 2


def _at_kink(m: NullRayMap, x) -> bool:
    if not m.kinks:
        return False
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return bool(np.any(np.isin(x, np.asarray(m.kinks))))


def flux(m: NullRayMap, x):
    """Vacuum energy flux at smooth points of ``m`` (scalar or array)."""
    if _at_kink(m, x):
        raise KinkError("flux requested at a registered kink; use flux_delta there")
    _, f1, f2, f3 = m.derivatives(x)
    out = -PREFACTOR * schwarzian(f1, f2, f3)
    return float(out) if np.ndim(out) == 0 else out


def side_derivatives(m: NullRayMap, x: float, side: int):
    """One-sided derivatives at ``x`` (side=+1 right, -1 left)."""
    if hasattr(m, "one_sided"):
        return m.one_sided(x, side)
    xs = np.nextafter(x, math.inf if side > 0 else -math.inf)
    return tuple(float(v) for v in m.derivatives(xs))


def flux_delta(m: NullRayMap, kink: float) -> float:
    """Coefficient of the delta term at ``kink``: -(1/24 pi) * jump of F''/F'."""
    left = side_derivatives(m, kink, -1)
    right = side_derivatives(m, kink, +1)
    if abs(right[1] - left[1]) > 1e-9 * max(abs(left[1]), abs(right[1])):
        raise KinkError(f"F' is discontinuous at {kink}; only F'' jumps are supported")
    jump = right[2] / right[1] - left[2] / left[1]
    return -PREFACTOR * jump


def total_energy(m: NullRayMap, region: tuple[float, float], rtol: float = QUAD_RTOL) -> float:
    """(1/48 pi) * integral of (F''/F')^2 over ``region``; delta terms excluded."""
    a, b = float(region[0]), float(region[1])
    if not a < b:
        raise DomainError(f"empty region {region}")

    def integrand(x):
        _, f1, f2, _ = m.derivatives(x)
        return float((f2 / f1) ** 2)

    inner = sorted(k for k in m.kinks if a < k < b)
    edges = [a, *inner, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, err = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=rtol, limit=400)
            except integrate.IntegrationWarning as exc:
                raise NonConvergenceError(f"total_energy quadrature on ({lo}, {hi}): {exc}") from None
        if not math.isfinite(val):
            raise NonConvergenceError(f"non-finite energy on ({lo}, {hi})")
        total += val
    return total / (48.0 * math.pi)


def mollified_delta(m: NullRayMap, kink: float, width: float, n_outer: int = 160,
                    n_inner: int = 64) -> float:
    """Integrated flux of the Gaussian-smoothed map across ``kink``.

    F is convolved with a unit Gaussian of standard deviation ``width``; the
    smoothed map's flux is integrated over kink +- 10 width.  Derivatives of
    order >= 2 are moved onto the kernel so that only the piecewise-smooth F''
    is ever sampled.  Tends to ``flux_delta`` as width -> 0.
    """
    w = float(width)
    xo, wo = np.polynomial.legendre.leggauss(n_outer)
    xs = kink + 10 * w * xo
    xi, wi = np.polynomial.legendre.leggauss(n_inner)

    # y-pieces [-12w, x - kink] and [x - kink, 12w]: F'' is smooth on each
    split = (xs - kink)[:, None]
    lo, hi = -12 * w, 12 * w
    pieces = []
    for a, b in ((lo, split), (split, hi)):
        half = 0.5 * (b - a)
        y = half * xi[None, :] + 0.5 * (a + b)
        pieces.append((y, half * wi[None, :]))
    y = np.concatenate([p[0] for p in pieces], axis=1)
    wy = np.concatenate([p[1] for p in pieces], axis=1)
    phi = np.exp(-0.5 * (y / w) ** 2) / (w * math.sqrt(2 * math.pi))
    dphi = -y / w**2 * phi
    _, f1, f2, _ = m.derivatives(xs[:, None] - y)
    s1 = np.sum(wy * f1 * phi, axis=1)
    s2 = np.sum(wy * f2 * phi, axis=1)
    s3 = np.sum(wy * f2 * dphi, axis=1)
    vals = -PREFACTOR * schwarzian(s1, s2, s3)
    return float(10 * w * np.dot(wo, vals))


@dataclass
class FluxProfile:
    grid: np.ndarray
    values: np.ndarray
    deltas: list[tuple[float, float]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values must have the same shape")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")

    def to_csv(self, path: str | Path | None = None, header_lines=()) -> str:
        from .io import format_csv

        extra = [f"delta {p:.12e} {c:.12e}" for p, c in self.deltas]
        text = format_csv(["x", "flux"], np.column_stack([self.grid, self.values]),
                          meta=list(header_lines), trailer=extra)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path: str | Path) -> "FluxProfile":
        from .io import parse_csv

        cols, data, comments = parse_csv(Path(path).read_text())
        if cols[:2] != ["x", "flux"]:
            raise ValueError(f"expected columns x, flux; got {cols}")
        deltas = []
        for c in comments:
            parts = c.split()
            if len(parts) == 3 and parts[0] == "delta":
                deltas.append((float(parts[1]), float(parts[2])))
        return cls(data[:, 0], data[:, 1], deltas)


def flux_profile(m: NullRayMap, grid, scale: float = 1.0) -> FluxProfile:
    """Sample the flux on ``grid`` and attach delta terms of kinks inside it.

    ``scale`` divides the values (pass kappa**2 for kappa-units output).
    """
    grid = np.asarray(grid, dtype=float)
    if m.kinks:
        grid = grid[~np.isin(grid, np.asarray(m.kinks))]
    values = np.atleast_1d(flux(m, grid)) / scale
    deltas = [(k, flux_delta(m, k) / scale) for k in m.kinks if grid[0] <= k <= grid[-1]]
    return FluxProfile(grid, values, deltas)
