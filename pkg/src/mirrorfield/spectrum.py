"""Particle content of the in-vacuum in outgoing wave-packet modes.

A packet mode is read out with the annihilator

    b_P = int du K(u) d_u phi_out(u),   K(u) = W(u) exp(i w u) / sqrt(pi w),

W a Gaussian window (standard deviation ``width``, cut at 6 widths).  Writing
phi_out(u) = phi_in(f(u)) and expanding phi_in in plane waves gives

    b_P = int dw' [alpha(w') a_w' + beta(w') a_w'^dag],
    beta(w')  = +i sqrt(w'/4 pi) int du K(u) f'(u) exp(+i w' f(u)),
    alpha(w') = -i sqrt(w'/4 pi) int du K(u) f'(u) exp(-i w' f(u)),

and the occupation is int |beta|^2 dw'.  The packet norm [b_P, b_P^dag]
equals width / (2 sqrt(pi)) up to exponentially small truncation terms, so
``normalized`` is directly comparable with 1 / (exp(2 pi w / kappa) - 1).

The u-integral runs over the packet in the trajectory parametrisation.
Where w' f'(u) is large the integrand oscillates far faster than the
amplitude varies; such stretches contribute only through their end points,
which are added by a two-term integration-by-parts expansion.  The remaining
"slow" stretches are integrated with Gauss-Legendre panels sized to the
local phase change.  The w' integral is done in s = log w'.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from .errors import DomainError, NonConvergenceError
from .stress_tensor import flux
from .trajectory import Trajectory

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (8, 16, 32, 64)}
# fast/slow threshold in units of (omega + kappa)
FAST_FACTOR = 30.0
TAIL_TOL = 5e-3


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("MIRRORFIELD_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class WavePacket:
    """Gaussian out-time window centred at ``center`` with std ``width``."""

    center: float
    width: float
    truncation: float = 6.0

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError(f"packet width must be positive, got {self.width}")

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.truncation * self.width,
                self.center + self.truncation * self.width)

    def window(self, u):
        return np.exp(-0.5 * ((u - self.center) / self.width) ** 2)

    def window_slope(self, u):
        return -(u - self.center) / self.width**2 * self.window(u)

    @property
    def norm(self) -> float:
        return self.width / (2.0 * math.sqrt(math.pi))


def mode_function(traj: Trajectory, omega: float, x_plus):
    """Outgoing plane-wave mode exp(-i w g(x+)) seen on past null infinity."""
    g = traj.invert(x_plus)
    return np.exp(-1j * omega * np.asarray(g))


class _PacketOverlap:
    """Overlap integrals of one packet with in plane waves of frequency w'."""

    def __init__(self, traj: Trajectory, omega: float, packet: WavePacket,
                 panel_width: float | None = None):
        if not omega > 0:
            raise DomainError(f"omega must be positive, got {omega}")
        self.traj, self.omega, self.packet = traj, float(omega), packet
        kappa = getattr(traj, "kappa", 1.0)
        lo, hi = packet.support
        pw = panel_width or min(0.25 / kappa, packet.width / 8)
        npan = max(8, int(math.ceil((hi - lo) / pw)))
        self.edges = np.linspace(lo, hi, npan + 1)
        self.f1_edges = traj.derivatives(self.edges)[1]
        self.threshold = FAST_FACTOR * (self.omega + kappa)
        self.pref = 1.0 / math.sqrt(math.pi * self.omega)

    def _slow_intervals(self, wp):
        edges = self.edges
        slow = wp * self.f1_edges <= self.threshold
        if not slow.any():
            return []
        sc = np.flatnonzero(slow[:-1] != slow[1:])
        a, b = edges[sc].copy(), edges[sc + 1].copy()
        left_slow = slow[sc]
        for _ in range(60):
            mid = 0.5 * (a + b)
            mid_slow = wp * self.traj.derivatives(mid)[1] <= self.threshold
            same_as_left = mid_slow == left_slow
            a = np.where(same_as_left, mid, a)
            b = np.where(same_as_left, b, mid)
        cuts = 0.5 * (a + b)
        bounds, start = [], (edges[0] if slow[0] else None)
        for k, cut in zip(sc, cuts):
            if slow[k]:
                bounds.append((start, float(cut)))
                start = None
            else:
                start = float(cut)
        if start is not None:
            bounds.append((start, edges[-1]))
        return bounds

    def _boundary_term(self, pt, wp, sign):
        # fast-side integral from a cut: exp(i phi) [q / i + q' / phi'], q = A / phi'
        f, f1, f2, _ = (float(v) for v in self.traj.derivatives(pt))
        W = float(self.packet.window(pt))
        Wp = float(self.packet.window_slope(pt))
        A = f1 * W * self.pref
        dA = (f2 * W + f1 * Wp) * self.pref
        dph = self.omega + sign * wp * f1
        q = A / dph
        dq = dA / dph - A * sign * wp * f2 / dph**2
        return np.exp(1j * (self.omega * pt + sign * wp * f)) * (q / 1j + dq / dph)

    def integral(self, wp: float, sign: int) -> complex:
        """int du K(u) f'(u) exp(sign * i w' f(u))."""
        bounds = self._slow_intervals(wp)
        if not bounds:
            return 0j
        edges = self.edges
        lo_parts, hi_parts = [], []
        for lo, hi in bounds:
            pts = np.r_[lo, edges[(edges > lo) & (edges < hi)], hi]
            lo_parts.append(pts[:-1])
            hi_parts.append(pts[1:])
        p_lo, p_hi = np.concatenate(lo_parts), np.concatenate(hi_parts)
        keep = p_hi > p_lo
        p_lo, p_hi = p_lo[keep], p_hi[keep]
        f1a = self.traj.derivatives(p_lo)[1]
        f1b = self.traj.derivatives(p_hi)[1]
        dphi = (self.omega + 1.3 * wp * np.maximum(f1a, f1b)) * (p_hi - p_lo)
        order = np.select([dphi < 4, dphi < 12, dphi < 30], [8, 16, 32], 64)
        total = 0j
        for n, (x, w) in _GL.items():
            sel = order == n
            if not sel.any():
                continue
            lo_, hi_ = p_lo[sel][:, None], p_hi[sel][:, None]
            half = 0.5 * (hi_ - lo_)
            u = half * x[None, :] + 0.5 * (hi_ + lo_)
            f, f1, _, _ = self.traj.derivatives(u)
            phase = self.omega * u + sign * wp * f
            total += np.sum(half * w[None, :] * f1 * self.packet.window(u) * np.exp(1j * phase))
        total *= self.pref
        for lo, hi in bounds:
            if lo > edges[0]:
                total += self._boundary_term(lo, wp, sign)
            if hi < edges[-1]:
                total -= self._boundary_term(hi, wp, sign)
        return total

    def beta(self, wp: float) -> complex:
        return 1j * math.sqrt(wp / (4 * math.pi)) * self.integral(wp, +1)

    def alpha(self, wp: float) -> complex:
        return -1j * math.sqrt(wp / (4 * math.pi)) * self.integral(wp, -1)

    def s_range(self) -> tuple[float, float]:
        smin = math.log(self.omega) - 12.0
        smax = math.log(self.threshold / float(self.f1_edges.min())) + 1.0
        return smin, smax


def bogoliubov(traj: Trajectory, omega: float, packet: WavePacket, omega_prime,
               convention: str = "standard"):
    """Return ``(alpha, beta)`` arrays at the in frequencies ``omega_prime``.

    ``convention="conjugate"`` evaluates the complex-conjugate integrals
    (window phase and plane-wave phase both reversed); |alpha|, |beta| agree.
    """
    ov = _PacketOverlap(traj, omega, packet)
    wps = np.atleast_1d(np.asarray(omega_prime, dtype=float))
    if np.any(wps <= 0):
        raise DomainError("in frequencies must be positive")
    if convention == "standard":
        al = np.array([ov.alpha(w) for w in wps])
        be = np.array([ov.beta(w) for w in wps])
    elif convention == "conjugate":
        # conj(int K f' e^{+i w' f}) = int conj(K) f' e^{-i w' f}; evaluated as such
        ovc = _ConjugatePacketOverlap(traj, omega, packet)
        al = np.array([ovc.alpha(w) for w in wps])
        be = np.array([ovc.beta(w) for w in wps])
    else:
        raise DomainError(f"unknown convention {convention!r}")
    return al, be


class _ConjugatePacketOverlap(_PacketOverlap):
    """Same overlaps with every phase reversed: K -> conj(K), exp(i w' f) -> exp(-i w' f)."""

    def __init__(self, traj, omega, packet):
        super().__init__(traj, omega, packet)
        self.omega = -self.omega
        self.pref = 1.0 / math.sqrt(math.pi * -self.omega)

    def beta(self, wp):
        return -1j * math.sqrt(wp / (4 * math.pi)) * self.integral(wp, -1)

    def alpha(self, wp):
        return 1j * math.sqrt(wp / (4 * math.pi)) * self.integral(wp, +1)


@dataclass
class OccupationResult:
    omega: float
    occupation: float
    norm: float
    tail_fraction: float
    error_estimate: float
    flagged: bool
    n_points: int
    notes: list[str] = field(default_factory=list)

    @property
    def normalized(self) -> float:
        return self.occupation / self.norm


def _radiating_flag(traj: Trajectory, packet: WavePacket) -> bool:
    kappa = getattr(traj, "kappa", 1.0)
    u = np.linspace(packet.center - 3 * packet.width, packet.center + 3 * packet.width, 121)
    try:
        vals = np.asarray(flux(traj, u))
    except Exception:
        return True
    return bool(np.any(np.abs(vals) < 0.1 * kappa**2 / (48 * math.pi)))


def occupation_report(traj: Trajectory, omega: float, packet: WavePacket,
                      ds: float | None = None, rtol: float = 1e-5,
                      workers: int | None = None) -> OccupationResult:
    """Expected particle number in the packet mode, int |beta(w')|^2 dw'.

    The s = log w' grid starts at spacing 0.1 and is halved until Simpson
    and its half-resolution copy agree to ``rtol`` (fixed grid if ``ds``).
    """
    ov = _PacketOverlap(traj, omega, packet)
    smin, smax = ov.s_range()
    workers = workers or default_workers()

    def dens_on(s_vals):
        if workers > 1 and len(s_vals) > 64:
            chunks = np.array_split(s_vals, workers)
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(lambda c: [abs(ov.beta(math.exp(x))) ** 2 for x in c], chunks))
            b2 = np.concatenate([np.asarray(p, dtype=float) for p in parts])
        else:
            b2 = np.array([abs(ov.beta(math.exp(x))) ** 2 for x in s_vals])
        return b2 * np.exp(s_vals)

    def integrate_(s, dens):
        # w' -> 0: |beta|^2 ~ w', so the piece below the grid is dens[0] / 2
        fine = float(simpson(dens, x=s)) + 0.5 * dens[0]
        coarse = float(simpson(dens[::2], x=s[::2])) + 0.5 * dens[0]
        return fine, abs(fine - coarse) / 15.0

    step = 0.1 if ds is None else float(ds)
    n = 4 * int(math.ceil((smax - smin) / (4 * step)))
    s = np.linspace(smin, smax, n + 1)
    dens = dens_on(s)
    notes = []
    for _ in range(6):
        total = float(simpson(dens, x=s))
        tail = float(simpson(dens[-21:], x=s[-21:])) / total if total > 0 else 0.0
        if tail < TAIL_TOL:
            break
        h = s[1] - s[0]
        extra = s[-1] + h * np.arange(1, 4 * int(math.ceil(5.0 / (4 * h))) + 1)
        s = np.concatenate([s, extra])
        dens = np.concatenate([dens, dens_on(extra)])
        notes.append(f"extended w' range to exp({s[-1]:.2f})")
    else:
        raise NonConvergenceError(f"w' tail still {tail:.2%} of the occupation")

    total, err = integrate_(s, dens)
    while ds is None and err > rtol * total and total > 1e-13 and s[1] - s[0] > 0.006:
        mids = 0.5 * (s[:-1] + s[1:])
        new = dens_on(mids)
        s2 = np.empty(2 * s.size - 1)
        d2 = np.empty_like(s2)
        s2[::2], s2[1::2] = s, mids
        d2[::2], d2[1::2] = dens, new
        s, dens = s2, d2
        total, err = integrate_(s, dens)
    if total > 1e-12 and err > 1e-2 * total:
        raise NonConvergenceError(f"w' quadrature error estimate {err:.3e} vs value {total:.3e}")
    return OccupationResult(float(omega), total, packet.norm, tail, err,
                            _radiating_flag(traj, packet), len(s), notes)


def occupation(traj: Trajectory, omega: float, packet: WavePacket, **kw) -> float:
    return occupation_report(traj, omega, packet, **kw).occupation


def planck(omega, kappa: float = 1.0):
    """Bose factor 1 / (exp(2 pi w / kappa) - 1) at temperature kappa / 2 pi."""
    return 1.0 / np.expm1(2 * np.pi * np.asarray(omega, dtype=float) / kappa)


@dataclass
class ModeSpectrum:
    omegas: np.ndarray
    occupations: np.ndarray
    packet: WavePacket
    reports: list[OccupationResult] = field(default_factory=list)

    def to_csv(self, path: str | Path | None = None, meta=()) -> str:
        from .io import format_csv

        rows = [(w, n, self.packet.center, self.packet.width)
                for w, n in zip(self.omegas, self.occupations)]
        text = format_csv(["omega", "occupation", "packet_center", "packet_width"], rows, meta=meta)
        if path is not None:
            Path(path).write_text(text)
        return text


def spectrum(traj: Trajectory, omegas, packet: WavePacket, **kw) -> ModeSpectrum:
    omegas = np.asarray(omegas, dtype=float)
    reports = [occupation_report(traj, w, packet, **kw) for w in omegas]
    return ModeSpectrum(omegas, np.array([r.occupation for r in reports]), packet, reports)
