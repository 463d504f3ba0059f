"""Shared builders for the scenario fixtures used across the test suite."""

import math

import mpmath
import numpy as np
import pytest

from resokit import expr as ex
from resokit import forcing as fc
from resokit.prng import SplitMix64
from resokit.system import (
    CyclicCoupling,
    MatrixSpec,
    RadialCoupling,
    SystemSpec,
    VarTerm,
)

SQRT2 = math.sqrt(2.0)


def mode_residual_fd(a, mode, step=1e-4, samples=1000):
    """max |v'' + A v| with v'' by second-order central differences.

    The difference quotient is evaluated in 40-digit arithmetic: in float64
    the cancellation noise of (v(t+h) - 2 v(t) + v(t-h)) / h^2 alone is
    ~1e-7 at unit amplitude, which would drown the quantity under test.
    Truncation error n^4 h^2 c / 12 remains and bounds what any amplitude
    can achieve.
    """
    a = np.asarray(a, dtype=float)
    aq = a @ mode.q
    worst = 0.0
    with mpmath.workdps(40):
        hh = mpmath.mpf(step)
        phi = mpmath.mpf(mode.phi)
        for t in np.linspace(0.0, 2.0 * math.pi, samples):
            tm = mpmath.mpf(float(t))
            s = mpmath.sin(mode.n * tm + phi)
            sp = mpmath.sin(mode.n * (tm + hh) + phi)
            sm = mpmath.sin(mode.n * (tm - hh) + phi)
            d2 = (sp - 2 * s + sm) / (hh * hh)
            for qi, aqi in zip(mode.q, aq):
                r = abs(mode.c * (d2 * float(qi) + s * float(aqi)))
                if r > worst:
                    worst = r
    return float(worst)


def sin_forcing(n: int, amplitude: float = 1.0) -> fc.TrigPoly:
    """p(t) = amplitude * sin(n t)."""
    return fc.TrigPoly(0.0, (0.0,) * n, (0.0,) * (n - 1) + (amplitude,))


def scalar_spec(h: ex.BoundedExpr, p: fc.TrigPoly, n: float = 1.0) -> SystemSpec:
    """d = 1 system; cyclic coupling wraps to self-coupling h(x_1)."""
    return SystemSpec(1, (n,), CyclicCoupling((h,)), (p,))


@pytest.fixture(scope="session")
def span_certified_spec():
    """h = 0.1 tanh, p = sin t: span condition holds with margin pi - 0.4."""
    return scalar_spec(ex.Scale(0.1, ex.Tanh()), sin_forcing(1))


@pytest.fixture(scope="session")
def linear_resonant_spec():
    """h = 0, p = sin t, n = 1: exact solution x = (sin t - t cos t)/2."""
    return scalar_spec(ex.Const(0.0), sin_forcing(1))


@pytest.fixture(scope="session")
def not_certified_spec():
    """h = tanh, p = sin t: 2*span = 4 > pi."""
    return scalar_spec(ex.Tanh(), sin_forcing(1))


@pytest.fixture(scope="session")
def nonresonant_spec():
    """n = sqrt(2), h = 0, p = sin t: bounded quasi-periodic motion."""
    return scalar_spec(ex.Const(0.0), sin_forcing(1), n=SQRT2)


@pytest.fixture(scope="session")
def cyclic3_spec():
    """d = 3 cyclic, n = (1, 1, 2), h_j = 0.1 tanh, forcing gain pi per j."""
    h = ex.Scale(0.1, ex.Tanh())
    return SystemSpec(
        3,
        (1.0, 1.0, 2.0),
        CyclicCoupling((h, h, h)),
        (sin_forcing(1), sin_forcing(1), sin_forcing(2)),
    )


@pytest.fixture(scope="session")
def radial2_spec():
    """d = 2 radial, h_j = tanh on [0, inf), p_1 = sin t, n = (1, sqrt 2)."""
    return SystemSpec(
        2,
        (1.0, SQRT2),
        RadialCoupling((ex.Tanh(), ex.Tanh())),
        (sin_forcing(1), fc.TrigPoly()),
    )


@pytest.fixture(scope="session")
def matrix_spec():
    """A = [[5/2, 3/2], [3/2, 5/2]], p along the eigenvalue-4 mode, h = 0.05 tanh."""
    q = 1.0 / SQRT2
    h = (
        (VarTerm(0, ex.Scale(0.05, ex.Tanh())),),
        (VarTerm(1, ex.Scale(0.05, ex.Tanh())),),
    )
    return MatrixSpec(
        ((2.5, 1.5), (1.5, 2.5)),
        h,
        (sin_forcing(2, q), sin_forcing(2, q)),
    )


def random_expr(rng: SplitMix64, depth: int = 3) -> ex.BoundedExpr:
    """Random tree over the bounded grammar, seeded and reproducible."""
    kind = int(rng.uniform(0.0, 7.0))
    if depth <= 0 or kind <= 0:
        return ex.Const(rng.uniform(-3.0, 3.0))
    a = rng.uniform(-2.0, 2.0)
    b = rng.uniform(-2.0, 2.0)
    if kind == 1:
        return ex.Tanh(a, b)
    if kind == 2:
        return ex.Atan(a, b)
    if kind == 3:
        return ex.Sin(a, b)
    if kind == 4:
        return ex.Cos(a, b)
    if kind == 5:
        return ex.Scale(rng.uniform(-2.0, 2.0), random_expr(rng, depth - 1))
    return ex.Sum((random_expr(rng, depth - 1), random_expr(rng, depth - 1)))
