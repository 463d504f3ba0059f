"""Trajectory integration, period sections, and one-period decompositions.

An embedded Runge-Kutta 5(4) pair with PI step-size control does the work;
the hot loop lives in the compiled extension ``_rkcore`` when available and
falls back to the pure-Python twin ``_rkcore_py`` otherwise (set
RESOKIT_PURE_PY=1 to force the fallback).  The stepper lands exactly on
requested sample times, so period sections at t = 2*k*pi are exact section
states, not interpolants.  Backward time is handled by reflecting the clock
and negating the vector field inside the same loop.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass

import numpy as np

from . import _rkcore_py
from . import forcing as fc
from ._tables import build_tables
from .system import MatrixSpec, component_range

TWO_PI = 2.0 * math.pi

__all__ = [
    "State",
    "SectionTrace",
    "VocComponent",
    "VocDecomposition",
    "StepUnderflowError",
    "NonFiniteStateError",
    "kernel_names",
    "active_kernel",
    "integrate",
    "flow_states",
    "section_trace",
    "voc_decompose",
    "sigma_bound",
]


class StepUnderflowError(RuntimeError):
    """The controller pushed the step size below 1e-14."""


class NonFiniteStateError(RuntimeError):
    """The state left the range of finite doubles."""


_KERNELS = {"python": _rkcore_py}
try:  # compiled extension is optional
    from . import _rkcore

    _KERNELS["compiled"] = _rkcore
except ImportError:  # pragma: no cover - depends on the build environment
    pass

_DEFAULT = (
    "python"
    if os.environ.get("RESOKIT_PURE_PY") == "1" or "compiled" not in _KERNELS
    else "compiled"
)


def kernel_names() -> tuple[str, ...]:
    return tuple(sorted(_KERNELS))


def active_kernel() -> str:
    """Name of the kernel used when none is requested explicitly."""
    return _DEFAULT


@dataclass
class State:
    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if self.x.shape != self.v.shape:
            raise ValueError("x and v must have the same length")

    @classmethod
    def from_y(cls, t: float, y: np.ndarray) -> "State":
        y = np.asarray(y, dtype=float)
        d = len(y) // 2
        return cls(t, y[:d], y[d:])

    @property
    def y(self) -> np.ndarray:
        return np.concatenate([self.x, self.v])


cached_tables = functools.lru_cache(maxsize=128)(build_tables)


def _check_tols(rel_tol: float, abs_tol: float) -> None:
    for name, v in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not 1e-13 <= v <= 1e-3:
            raise ValueError(f"{name} must lie in [1e-13, 1e-3], got {v!r}")


def _run(spec, s0: State, times: np.ndarray, rel_tol, abs_tol, kernel) -> np.ndarray:
    """States at the given times, all on one side of s0.t."""
    kern = _KERNELS[kernel or _DEFAULT]
    tab = cached_tables(spec)
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.empty((0, 2 * spec.d))
    forward = times[-1] >= s0.t
    tsign = 1.0 if forward else -1.0
    status, _, rec, _ = kern.run(
        tab, tsign, tsign * s0.t, s0.y, tsign * times, rel_tol, abs_tol
    )
    if status == _rkcore_py.STATUS_UNDERFLOW:
        raise StepUnderflowError("step size fell below 1e-14")
    if status == _rkcore_py.STATUS_NONFINITE:
        raise NonFiniteStateError("state became non-finite during integration")
    return rec


def integrate(
    spec,
    s0: State,
    t1: float,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
    record: np.ndarray | None = None,
    kernel: str | None = None,
):
    """Flow s0 to time t1.

    Returns the end state, or (end state, recorded states) when ``record``
    gives intermediate times (monotone, between s0.t and t1 inclusive).
    """
    _check_tols(rel_tol, abs_tol)
    if record is None:
        if t1 == s0.t:
            return State(t1, s0.x.copy(), s0.v.copy())
        rec = _run(spec, s0, np.array([t1]), rel_tol, abs_tol, kernel)
        return State.from_y(t1, rec[-1])
    record = np.asarray(record, dtype=float)
    states = flow_states(spec, s0, record, rel_tol, abs_tol, kernel)
    if t1 == s0.t:
        end = State(t1, s0.x.copy(), s0.v.copy())
    elif record.size and record[-1] == t1:
        end = State.from_y(t1, states[-1])
    else:
        rec = _run(spec, s0, np.array([t1]), rel_tol, abs_tol, kernel)
        end = State.from_y(t1, rec[-1])
    return end, states


def flow_states(
    spec,
    s0: State,
    times,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
    kernel: str | None = None,
) -> np.ndarray:
    """States (rows [x, v]) at the given times, which may straddle s0.t.

    Times on each side of s0.t are integrated in order away from the start;
    a time equal to s0.t returns the initial state itself.
    """
    _check_tols(rel_tol, abs_tol)
    times = np.asarray(times, dtype=float)
    out = np.empty((len(times), 2 * spec.d))
    at0 = times == s0.t
    fwd = times > s0.t
    bwd = times < s0.t
    out[at0] = s0.y
    if fwd.any():
        tf = times[fwd]
        uf = np.unique(tf)
        rec = _run(spec, s0, uf, rel_tol, abs_tol, kernel)
        out[fwd] = rec[np.searchsorted(uf, tf)]
    if bwd.any():
        tb = times[bwd]
        ub = np.unique(tb)[::-1]  # run away from s0.t: decreasing
        rec = _run(spec, s0, ub, rel_tol, abs_tol, kernel)
        out[bwd] = rec[len(ub) - 1 - np.searchsorted(ub[::-1], tb)]
    return out


@dataclass
class SectionTrace:
    """States sampled on the period sections t = 2*k*pi, k_min..k_max."""

    ks: np.ndarray
    states: np.ndarray  # row per k: [x_1..x_d, v_1..v_d]
    rel_tol: float
    abs_tol: float

    def state(self, k: int) -> np.ndarray:
        return self.states[int(k) - int(self.ks[0])]

    def component(self, j: int, d: int) -> np.ndarray:
        """(x_j, v_j) columns over all k (0-based j)."""
        return self.states[:, [j, d + j]]


def section_trace(
    spec,
    s0: State,
    k_min: int,
    k_max: int,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
    kernel: str | None = None,
) -> SectionTrace:
    """Trace the Poincare sections t = 2*k*pi from a state at t = 0."""
    if not k_min <= 0 <= k_max:
        raise ValueError("need k_min <= 0 <= k_max")
    if s0.t != 0.0:
        raise ValueError("section traces start from a state at t = 0")
    _check_tols(rel_tol, abs_tol)
    ks = np.arange(k_min, k_max + 1)
    states = flow_states(spec, s0, TWO_PI * ks, rel_tol, abs_tol, kernel)
    return SectionTrace(ks, states, rel_tol, abs_tol)


@dataclass
class VocComponent:
    """x_j(t) = amp * sin(n t + omega) + sigma(t) over one period."""

    j: int
    n: int
    amp: float
    omega: float
    sigma: np.ndarray
    sup: float
    sup_d1: float
    sup_d2: float


@dataclass
class VocDecomposition:
    ts: np.ndarray
    components: dict[int, VocComponent]


def voc_decompose(
    spec,
    s0: State,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-10,
    npoints: int = 2048,
    kernel: str | None = None,
) -> VocDecomposition:
    """Split each resonant component into its free oscillation plus residual.

    The residual sigma_j is sampled on a uniform grid over [0, 2*pi]; its
    first two derivatives are estimated by central differences on the grid
    interior, which is what the closed-form bound check consumes.
    """
    if isinstance(spec, MatrixSpec):
        raise TypeError("decomposition applies to component-form systems")
    if s0.t != 0.0:
        raise ValueError("decomposition is taken over [0, 2*pi] from t = 0")
    ts = np.linspace(0.0, TWO_PI, npoints)
    states = flow_states(spec, s0, ts, rel_tol, abs_tol, kernel)
    dt = ts[1] - ts[0]
    comps: dict[int, VocComponent] = {}
    for j in range(spec.d):
        nj = spec.n[j]
        if abs(nj - round(nj)) > 1e-9 or round(nj) < 1:
            continue
        n = int(round(nj))
        xj0 = float(s0.x[j])
        vj0 = float(s0.v[j])
        amp = math.hypot(xj0, vj0 / nj)
        omega = math.atan2(nj * xj0, vj0) % TWO_PI
        sigma = states[:, j] - amp * np.sin(nj * ts + omega)
        d1 = (sigma[2:] - sigma[:-2]) / (2.0 * dt)
        d2 = (sigma[2:] - 2.0 * sigma[1:-1] + sigma[:-2]) / (dt * dt)
        comps[j] = VocComponent(
            j,
            n,
            amp,
            omega,
            sigma,
            float(np.max(np.abs(sigma))),
            float(np.max(np.abs(d1))),
            float(np.max(np.abs(d2))),
        )
    return VocDecomposition(ts, comps)


def sigma_bound(spec, j: int | None = None) -> float:
    """Closed-form bound on the C^2 norm of the one-period residual.

    From sigma'' + n^2 sigma = g with zero initial data and |g| <= M
    (M = sup|h_j| + sup|p_j|), Duhamel's formula gives |sigma| <= 2*pi*M/n,
    |sigma'| <= 2*pi*M and |sigma''| <= M*(1 + 2*pi*n) on [0, 2*pi], none of
    which depends on the oscillation amplitude.  With j=None, the maximum
    over components is returned.
    """
    if isinstance(spec, MatrixSpec):
        raise TypeError("the residual bound applies to component-form systems")
    if j is None:
        return max(sigma_bound(spec, jj) for jj in range(spec.d))
    n = spec.n[j]
    m = component_range(spec, j).abs_bound + fc.sup_bound(spec.p[j])
    return m * max(TWO_PI / n, TWO_PI, 1.0 + TWO_PI * n)
