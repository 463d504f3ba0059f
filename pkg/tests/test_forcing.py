"""Trigonometric forcings: gains, phases, windows, and the Simpson oracle."""

import math

import mpmath
import numpy as np
import pytest

from conftest import sin_forcing
from resokit import forcing as fc
from resokit.prng import SplitMix64

PI = math.pi


def test_eval_zero_poly():
    assert fc.evaluate(fc.TrigPoly(), 1.0) == 0.0


def test_eval_single_harmonic():
    p = fc.TrigPoly(0.0, (0.0, 0.0), (0.0, 1.0))  # sin(2t)
    assert fc.evaluate(p, PI / 4) == pytest.approx(1.0, abs=1e-15)


def test_eval_mixed_against_high_precision():
    # 0.5 + cos(0.7) - 2 sin(2.1)
    p = fc.TrigPoly(0.5, (1.0, 0.0, 0.0), (0.0, 0.0, -2.0))
    with mpmath.workdps(50):
        expected = float(0.5 + mpmath.cos(mpmath.mpf("0.7")) - 2 * mpmath.sin(mpmath.mpf("2.1")))
    assert expected == pytest.approx(-0.4615765460132591, abs=1e-15)
    assert fc.evaluate(p, 0.7) == pytest.approx(expected, abs=1e-14)


def test_padding_and_coeff_access():
    p = fc.TrigPoly(1.0, (2.0,), (0.0, 3.0))
    assert p.cos == (2.0, 0.0)
    assert p.sin == (0.0, 3.0)
    assert p.coeff(2) == (0.0, 3.0)
    assert p.coeff(7) == (0.0, 0.0)
    with pytest.raises(ValueError):
        p.coeff(0)


def _gain_by_quadrature(p, n, panels=4096):
    re = fc.simpson_integral(lambda t: fc.evaluate(p, t) * np.cos(n * t), 0.0, 2 * PI, panels)
    im = fc.simpson_integral(lambda t: fc.evaluate(p, t) * np.sin(n * t), 0.0, 2 * PI, panels)
    return math.hypot(re, im)


def test_gain_orthogonality():
    assert fc.fourier_gain(sin_forcing(2), 2) == pytest.approx(PI, abs=1e-12)
    assert _gain_by_quadrature(sin_forcing(2), 2) == pytest.approx(PI, abs=1e-9)
    p5 = fc.TrigPoly(0.0, (0.0,) * 4 + (1.0,), ())  # cos(5t)
    assert fc.fourier_gain(p5, 2) == 0.0


def test_gain_three_four_five():
    p = fc.TrigPoly(0.0, (3.0,), (4.0,))
    assert fc.fourier_gain(p, 1) == pytest.approx(5.0 * PI, rel=1e-14)
    assert _gain_by_quadrature(p, 1) == pytest.approx(5.0 * PI, abs=1e-9)


def _grid_argmax_phase(p, n, m=100_000):
    phis = np.arange(m) * (2 * PI / m)
    return float(phis[np.argmax(fc.response(p, n, phis))])


@pytest.mark.parametrize(
    "p,n,expected",
    [
        (sin_forcing(3), 3, 0.0),
        (fc.TrigPoly(0.0, (1.0,), ()), 1, PI / 2),  # cos t
        (fc.TrigPoly(0.0, (-1.0,), (1.0,)), 1, 7 * PI / 4),  # sin t - cos t
    ],
)
def test_optimal_phase_against_grid_search(p, n, expected):
    phi0 = fc.optimal_phase(p, n)
    assert phi0 == pytest.approx(expected, abs=1e-12)
    grid = _grid_argmax_phase(p, n)
    delta = (grid - phi0 + PI) % (2 * PI) - PI
    assert abs(delta) < 1e-4


def test_optimal_phase_zero_gain_errors():
    with pytest.raises(fc.GainZeroError):
        fc.optimal_phase(sin_forcing(1), 2)


def test_phase_window_cap_and_width():
    w0 = fc.phase_window(sin_forcing(1), 1, 0.0)
    assert w0.half_width == pytest.approx(PI / 2 - 1e-6, abs=1e-12)
    w = fc.phase_window(sin_forcing(1), 1, PI / 2)
    assert w.half_width == pytest.approx(math.acos(0.5), rel=1e-12)  # pi/3
    assert w.center == 0.0
    with pytest.raises(fc.InfeasibleWindowError):
        fc.phase_window(sin_forcing(1), 1, PI)


def test_phase_window_phases_inside():
    w = fc.phase_window(sin_forcing(1), 1, PI / 2)
    p1, p2 = w.phases()
    assert w.contains(p1) and w.contains(p2)
    gap = abs((p1 - p2 + PI) % (2 * PI) - PI)
    assert 0.0 < gap < PI


def test_simpson_examples():
    assert fc.simpson_integral(np.sin, 0.0, 2 * PI, 64) == pytest.approx(0.0, abs=1e-12)
    val = fc.simpson_integral(lambda t: np.sin(t) ** 2, 0.0, 2 * PI, 1024)
    assert val == pytest.approx(PI, abs=1e-9)
    # kink of |sin| at pi sits on a panel boundary for even panel counts
    val = fc.simpson_integral(lambda t: np.abs(np.sin(t)), 0.0, 2 * PI, 4096)
    assert val == pytest.approx(4.0, abs=1e-6)
    # the one-signed parts integrate to 2 per period each
    plus = fc.simpson_integral(lambda t: np.maximum(np.sin(t), 0.0), 0.0, 2 * PI, 4096)
    assert plus == pytest.approx(2.0, abs=1e-6)


def test_simpson_rejects_odd_panels():
    with pytest.raises(ValueError):
        fc.simpson_integral(np.sin, 0.0, 1.0, 3)


def _random_poly(rng, kmax=8):
    k = 1 + int(rng.uniform(0.0, kmax))
    cos = tuple(rng.uniform(-5.0, 5.0) for _ in range(k))
    sin = tuple(rng.uniform(-5.0, 5.0) for _ in range(k))
    return fc.TrigPoly(rng.uniform(-5.0, 5.0), cos, sin)


def test_gain_quadrature_equivalence_random():
    rng = SplitMix64(31337)
    for i in range(100):
        p = _random_poly(rng)
        n = 1 + i % 8
        assert fc.fourier_gain(p, n) == pytest.approx(
            _gain_by_quadrature(p, n), abs=1e-8
        )


def test_response_maximality_random():
    rng = SplitMix64(4242)
    phis = np.arange(10_000) * (2 * PI / 10_000)
    for _ in range(100):
        p = _random_poly(rng)
        n = 1 + int(rng.uniform(0.0, 8.0))
        if fc.fourier_gain(p, n) == 0.0:
            continue
        phi0 = fc.optimal_phase(p, n)
        assert fc.response(p, n, phi0) >= fc.response(p, n, phis).max() - 1e-12
        assert fc.response(p, n, phi0) == pytest.approx(fc.fourier_gain(p, n), rel=1e-12)


def test_window_correctness_random():
    rng = SplitMix64(777)
    phis = np.arange(20_000) * (2 * PI / 20_000)
    for _ in range(50):
        p = _random_poly(rng)
        n = 1 + int(rng.uniform(0.0, 8.0))
        gain = fc.fourier_gain(p, n)
        if gain < 1e-6:
            continue
        threshold = gain * rng.uniform(0.05, 0.95)
        w = fc.phase_window(p, n, threshold)
        resp = fc.response(p, n, phis)
        inside = np.array([w.contains(float(ph)) for ph in phis])
        assert np.all(resp[inside] > threshold)
        if w.half_width < PI / 2 - 2e-6:  # uncapped window: sharp outside bound
            assert np.all(resp[~inside] <= threshold + 1e-9)


def test_sup_bound():
    p = fc.TrigPoly(-1.5, (2.0, 0.0), (0.0, -3.0))
    assert fc.sup_bound(p) == 6.5
    ts = np.linspace(0.0, 2 * PI, 10001)
    assert np.max(np.abs(fc.evaluate(p, ts))) <= fc.sup_bound(p) + 1e-12


def test_json_round_trip():
    p = fc.TrigPoly(0.25, (1.0, -2.0), (0.5, 0.0))
    assert fc.from_dict(fc.to_dict(p)) == p
