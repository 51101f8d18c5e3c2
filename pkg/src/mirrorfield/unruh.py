"""Schmidt spectra of Unruh-mode pairs.

Each Rindler frequency contributes a two-mode squeezed state with Schmidt
weights p_n proportional to q^n, q = exp(-2 pi omega / a).  Truncating at N
particles and sending a -> infinity gives N + 1 equal weights, an almost
maximally entangled pair.  The weights depend on omega / a only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError


def _ratio(omega: float, a: float) -> float:
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    return 2.0 * math.pi * omega / a


@dataclass
class UnruhMode:
    omega: float
    a: float
    N: int | None
    schmidt: np.ndarray

    @property
    def entropy(self) -> float:
        return _entropy(self.schmidt)

    def to_csv(self, path: str | Path | None = None, meta=()) -> str:
        from .io import format_csv

        text = format_csv(["n", "weight"], [(n, p) for n, p in enumerate(self.schmidt)], meta=meta)
        if path is not None:
            Path(path).write_text(text)
        return text

    def summary(self) -> dict:
        return {"omega": self.omega, "a": self.a, "N": self.N, "entropy": self.entropy,
                "levels": int(self.schmidt.size)}


def _geometric_cutoff(beta: float) -> int:
    # enough terms that the omitted tail q^(n+1) is below double precision
    return max(1, int(math.ceil(40.0 / beta)))


def schmidt_spectrum(omega: float, a: float, N: int | None = None, n_max: int | None = None) -> np.ndarray:
    """Weights p_n = q^n / Z, n = 0..N (untruncated: (1 - q) q^n up to ``n_max``)."""
    beta = _ratio(omega, a)
    if N is not None:
        if N < 0:
            raise DomainError("N must be nonnegative")
        logw = -beta * np.arange(N + 1)
        w = np.exp(logw - logw.max())
        return w / w.sum()
    n_max = _geometric_cutoff(beta) if n_max is None else n_max
    n = np.arange(n_max + 1)
    # 1 - q as -expm1(-beta) stays accurate when beta is small
    return -np.expm1(-beta) * np.exp(-beta * n)


def unruh_mode(omega: float, a: float, N: int | None = None) -> UnruhMode:
    return UnruhMode(float(omega), float(a), N, schmidt_spectrum(omega, a, N))


def _entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def mode_entropy(omega: float, a: float, N: int | None = None) -> float:
    """Entanglement entropy -sum p_n ln p_n of one mode pair."""
    if N is not None:
        return _entropy(schmidt_spectrum(omega, a, N))
    beta = _ratio(omega, a)
    q = math.exp(-beta)
    # closed form of the geometric distribution
    return -math.log1p(-q) + beta * q / -math.expm1(-beta) if q > 0 else 0.0


def thermal_identity(omega: float, a: float) -> tuple[float, float]:
    """(beta <n> + ln Z, summed entropy of the untruncated weights)."""
    beta = _ratio(omega, a)
    mean_n = 1.0 / math.expm1(beta)
    lnZ = -math.log(-math.expm1(-beta))
    return beta * mean_n + lnZ, _entropy(schmidt_spectrum(omega, a))


def rescaling_invariance_check(omega: float, a: float, s: float, N: int | None = 3) -> float:
    """Largest weight difference between (omega, a) and (s omega, s a)."""
    if not s > 0:
        raise DomainError("scale must be positive")
    p = schmidt_spectrum(omega, a, N)
    q = schmidt_spectrum(s * omega, s * a, N)
    if p.size != q.size:
        return math.inf
    return float(np.max(np.abs(p - q)))


def multimode_entropy(omegas, a: float, N: int | None = None) -> float:
    """Total entropy of independent mode pairs k = 1..K."""
    return float(sum(mode_entropy(float(w), a, N) for w in np.asarray(omegas, dtype=float)))
