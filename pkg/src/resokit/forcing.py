"""2*pi-periodic forcings as finite trigonometric polynomials.

Restricting forcings to finite harmonic sums makes every Fourier functional
exact: the resonant gain, the optimal phase and the phase windows are closed
forms in the coefficients, and composite Simpson quadrature is kept purely
as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

TWO_PI = 2.0 * math.pi

__all__ = [
    "TrigPoly",
    "PhaseWindow",
    "GainZeroError",
    "InfeasibleWindowError",
    "evaluate",
    "fourier_gain",
    "response",
    "optimal_phase",
    "phase_window",
    "simpson_integral",
    "simpson_values",
    "sup_bound",
    "to_dict",
    "from_dict",
]


class GainZeroError(ValueError):
    """The targeted harmonic has zero amplitude; the optimal phase is undefined."""


class InfeasibleWindowError(ValueError):
    """Requested response threshold is not below the attainable maximum."""


@dataclass(frozen=True)
class TrigPoly:
    """p(t) = a0 + sum_k (cos_k * cos(k t) + sin_k * sin(k t)), k = 1..K."""

    a0: float = 0.0
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()

    def __post_init__(self):
        c = tuple(float(v) for v in self.cos)
        s = tuple(float(v) for v in self.sin)
        k = max(len(c), len(s))
        object.__setattr__(self, "cos", c + (0.0,) * (k - len(c)))
        object.__setattr__(self, "sin", s + (0.0,) * (k - len(s)))
        object.__setattr__(self, "a0", float(self.a0))

    @property
    def max_harmonic(self) -> int:
        return len(self.cos)

    def coeff(self, n: int) -> tuple[float, float]:
        """(cos, sin) coefficient pair of the n-th harmonic, 0 beyond K."""
        if n < 1:
            raise ValueError("harmonic index must be >= 1")
        if n > len(self.cos):
            return 0.0, 0.0
        return self.cos[n - 1], self.sin[n - 1]


def evaluate(p: TrigPoly, t):
    """Evaluate p at scalar or array times."""
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, p.a0)
    for k in range(1, p.max_harmonic + 1):
        ak, bk = p.cos[k - 1], p.sin[k - 1]
        if ak != 0.0:
            out = out + ak * np.cos(k * t)
        if bk != 0.0:
            out = out + bk * np.sin(k * t)
    return float(out) if out.ndim == 0 else out


def fourier_gain(p: TrigPoly, n: int) -> float:
    """|integral_0^{2pi} p(t) e^{i n t} dt| = pi * hypot(a_n, b_n)."""
    if n < 1:
        raise ValueError("harmonic index must be >= 1")
    an, bn = p.coeff(n)
    return math.pi * math.hypot(an, bn)


def response(p: TrigPoly, n: int, phi):
    """integral_0^{2pi} p(t) sin(n t + phi) dt = pi (b_n cos phi + a_n sin phi).

    Accepts a scalar phase or an array of phases.
    """
    an, bn = p.coeff(n)
    out = math.pi * (bn * np.cos(phi) + an * np.sin(phi))
    return float(out) if np.ndim(out) == 0 else out


def optimal_phase(p: TrigPoly, n: int) -> float:
    """Phase in [0, 2pi) maximizing the response; the maximum equals the gain."""
    an, bn = p.coeff(n)
    if an == 0.0 and bn == 0.0:
        raise GainZeroError(f"harmonic {n} of the forcing vanishes")
    return math.atan2(an, bn) % TWO_PI


@dataclass(frozen=True)
class PhaseWindow:
    """Open arc {phi : gain * cos(phi - center) > threshold} around the optimum.

    The half width is capped just below pi/2 so the window never degenerates
    into a half circle; inside the (possibly capped) window the response
    strictly exceeds the threshold.
    """

    center: float
    half_width: float
    threshold: float

    def contains(self, phi: float) -> bool:
        delta = (phi - self.center + math.pi) % TWO_PI - math.pi
        return abs(delta) < self.half_width

    def phases(self) -> tuple[float, float]:
        """Two distinct phases center -/+ half_width/2 inside the window."""
        return (
            (self.center - 0.5 * self.half_width) % TWO_PI,
            (self.center + 0.5 * self.half_width) % TWO_PI,
        )


_HALF_WIDTH_CAP = math.pi / 2.0 - 1e-6


def phase_window(p: TrigPoly, n: int, threshold: float) -> PhaseWindow:
    gain = fourier_gain(p, n)
    if not threshold < gain:
        raise InfeasibleWindowError(
            f"threshold {threshold!r} is not below the gain {gain!r}"
        )
    ratio = threshold / gain
    half = math.acos(max(ratio, -1.0)) if ratio > -1.0 else math.pi
    return PhaseWindow(optimal_phase(p, n), min(half, _HALF_WIDTH_CAP), threshold)


def sup_bound(p: TrigPoly) -> float:
    """Coefficient bound on sup |p|: |a0| + sum (|a_k| + |b_k|)."""
    return abs(p.a0) + sum(abs(a) + abs(b) for a, b in zip(p.cos, p.sin))


def simpson_integral(
    f: Callable[[np.ndarray], np.ndarray], t0: float, t1: float, panels: int
) -> float:
    """Composite Simpson rule with an even number of panels.

    ``f`` must accept a numpy array of nodes.  Deterministic; serves as the
    quadrature oracle for all closed-form integrals in this package.
    """
    ts = np.linspace(t0, t1, _check_panels(panels) + 1)
    return simpson_values(np.asarray(f(ts), dtype=float), t0, t1)


def simpson_values(ys: np.ndarray, t0: float, t1: float) -> float:
    """Simpson rule on precomputed samples at panels+1 equispaced nodes."""
    m = len(ys) - 1
    _check_panels(m)
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((t1 - t0) / (3.0 * m) * np.dot(w, ys))


def _check_panels(panels: int) -> int:
    if panels < 2 or panels % 2 != 0:
        raise ValueError(f"panel count must be even and >= 2, got {panels}")
    return panels


def to_dict(p: TrigPoly) -> dict:
    return {"a0": p.a0, "cos": list(p.cos), "sin": list(p.sin)}


def from_dict(d: dict) -> TrigPoly:
    return TrigPoly(
        float(d.get("a0", 0.0)),
        tuple(d.get("cos", ())),
        tuple(d.get("sin", ())),
    )
