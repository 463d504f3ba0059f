"""Bounded expression trees: evaluation, sound ranges, asymptotic enclosures."""

import json
import math

import mpmath
import numpy as np
import pytest

from conftest import random_expr
from resokit import expr as ex
from resokit.prng import SplitMix64


def test_eval_const():
    assert ex.evaluate(ex.Const(3.0), 17.2) == 3.0


def test_eval_tanh_origin():
    assert ex.evaluate(ex.Tanh(), 0.0) == 0.0


def test_eval_composite_against_high_precision():
    # atan(1) + 0.1*sin(1), checked against 50-digit arithmetic
    e = ex.Sum((ex.Atan(), ex.Scale(0.1, ex.Sin())))
    with mpmath.workdps(50):
        expected = float(mpmath.atan(1) + mpmath.mpf("0.1") * mpmath.sin(1))
    assert expected == pytest.approx(0.8695452618782381, abs=1e-15)
    assert ex.evaluate(e, 1.0) == pytest.approx(expected, abs=1e-15)


def test_eval_array_matches_scalar():
    e = ex.Sum((ex.Atan(0.7, -0.3), ex.Scale(-1.5, ex.Cos(2.0, 0.1))))
    xs = np.linspace(-5.0, 5.0, 101)
    arr = ex.evaluate_array(e, xs)
    for x, val in zip(xs, arr):
        assert val == pytest.approx(ex.evaluate(e, float(x)), abs=1e-15)


def test_range_const():
    r = ex.global_range(ex.Const(2.5))
    assert (r.lower, r.upper, r.exact) == (2.5, 2.5, True)


def test_range_tanh_affine():
    r = ex.global_range(ex.Tanh(2.0, 1.0))
    assert (r.lower, r.upper, r.exact) == (-1.0, 1.0, True)


def test_range_correlated_sum_is_conservative():
    twice = ex.Sum((ex.Sin(), ex.Sin()))
    r = ex.global_range(twice)
    assert (r.lower, r.upper) == (-2.0, 2.0)
    cancel = ex.Sum((ex.Sin(), ex.Scale(-1.0, ex.Sin())))
    rc = ex.global_range(cancel)
    assert (rc.lower, rc.upper) == (-2.0, 2.0)
    assert not rc.exact
    # dense sampling confirms containment for both
    xs = np.linspace(-100.0, 100.0, 20001)
    for e, r_ in ((twice, r), (cancel, rc)):
        vals = ex.evaluate_array(e, xs)
        assert vals.min() >= r_.lower - 1e-12
        assert vals.max() <= r_.upper + 1e-12


def test_asymptotics_tanh():
    rep = ex.asymptotics(ex.Tanh())
    assert rep.at_plus == (1.0, 1.0)
    assert rep.at_minus == (-1.0, -1.0)
    assert rep.delta_cyclic == 2.0


def test_asymptotics_const():
    rep = ex.asymptotics(ex.Const(4.0))
    assert rep.delta_cyclic == 0.0
    assert rep.delta_radial == 0.0


def _convergence_gap(e, r):
    """How far values at |x| >= r may still sit outside the limit enclosure.

    tanh approaches its limits like 2 exp(-2|a|x) and atan like 1/(|a| x);
    the periodic primitives never leave their enclosure.  Scales and sums
    propagate linearly, giving a sound finite-distance allowance for the
    sampling oracle.
    """
    t = type(e)
    if t is ex.Const or t in (ex.Sin, ex.Cos):
        return 0.0
    if t is ex.Tanh:
        return 2.0 * math.exp(-2.0 * min(abs(e.a) * r, 350.0)) if e.a else 0.0
    if t is ex.Atan:
        return min(math.pi, 1.0 / (abs(e.a) * r)) if e.a else 0.0
    if t is ex.Scale:
        return abs(e.c) * _convergence_gap(e.arg, r)
    return sum(_convergence_gap(a, r) for a in e.args)


def test_asymptotics_atan_plus_wiggle():
    e = ex.Sum((ex.Atan(), ex.Scale(0.1, ex.Sin())))
    rep = ex.asymptotics(e)
    assert rep.at_plus == pytest.approx((math.pi / 2 - 0.1, math.pi / 2 + 0.1))
    assert rep.delta_cyclic == pytest.approx(math.pi + 0.2)
    # empirical bracket over a far window is inside the reported interval,
    # up to the distance atan still is from its limit at x = 1e6
    xs = np.linspace(1e6, 1e6 + 1e3, 200001)
    vals = ex.evaluate_array(e, xs)
    gap = _convergence_gap(e, 1e6) + 1e-9
    assert gap < 2e-6
    assert vals.min() >= rep.at_plus[0] - gap
    assert vals.max() <= rep.at_plus[1] + gap


def test_asymptotics_half_line():
    rep = ex.asymptotics(ex.Tanh(), "half")
    assert rep.at_minus is None
    assert rep.delta_cyclic is None
    assert rep.delta_radial == 0.0


def test_asymptotics_rejects_unknown_domain():
    with pytest.raises(ValueError):
        ex.asymptotics(ex.Tanh(), "ray")


def _log_grid(limit=1e8, per_decade=40):
    mags = np.logspace(-3, math.log10(limit), 9 * per_decade)
    return np.concatenate([-mags[::-1], [0.0], mags])


def test_random_trees_sound_and_consistent():
    rng = SplitMix64(2024)
    grid = _log_grid()
    far = np.linspace(1e6, 2e6, 4001)
    for _ in range(60):
        e = random_expr(rng, depth=4)
        r = ex.global_range(e)
        vals = ex.evaluate_array(e, grid)
        assert vals.min() >= r.lower - 1e-12
        assert vals.max() <= r.upper + 1e-12
        rep = ex.asymptotics(e)
        gap = _convergence_gap(e, 1e6) + 1e-9
        plus = ex.evaluate_array(e, far)
        assert plus.min() >= rep.at_plus[0] - gap
        assert plus.max() <= rep.at_plus[1] + gap
        minus = ex.evaluate_array(e, -far)
        assert minus.min() >= rep.at_minus[0] - gap
        assert minus.max() <= rep.at_minus[1] + gap
        # asymptotic spans are nonnegative and within the global span
        assert 0.0 <= rep.delta_cyclic <= r.span + 1e-12
        assert 0.0 <= rep.delta_radial <= r.span + 1e-12
        for lo, hi in (rep.at_plus, rep.at_minus):
            assert r.lower - 1e-12 <= lo <= hi <= r.upper + 1e-12


def test_compiled_program_matches_tree_walk():
    rng = SplitMix64(99)
    for _ in range(40):
        e = random_expr(rng, depth=4)
        prog = ex.compile_program(e)
        stack = [0.0] * prog.stack_size
        for x in (-2.0, -0.3, 0.0, 1.7, 25.0):
            sp = 0
            for op, a, b in zip(prog.code, prog.pa, prog.pb):
                if op == ex.OP_CONST:
                    stack[sp] = a
                    sp += 1
                elif op == ex.OP_TANH:
                    stack[sp] = math.tanh(a * x + b)
                    sp += 1
                elif op == ex.OP_ATAN:
                    stack[sp] = math.atan(a * x + b)
                    sp += 1
                elif op == ex.OP_SIN:
                    stack[sp] = math.sin(a * x + b)
                    sp += 1
                elif op == ex.OP_COS:
                    stack[sp] = math.cos(a * x + b)
                    sp += 1
                elif op == ex.OP_MUL:
                    stack[sp - 1] = a * stack[sp - 1]
                else:
                    stack[sp - 2] = stack[sp - 2] + stack[sp - 1]
                    sp -= 1
            assert sp == 1
            assert stack[0] == pytest.approx(ex.evaluate(e, x), abs=1e-14)


def test_json_round_trip_bit_exact():
    rng = SplitMix64(5)
    payloads = [random_expr(rng, depth=4) for _ in range(25)]
    payloads.append(ex.Scale(1e-300, ex.Tanh(1.2345678901234567e10, -9.87e-5)))
    for e in payloads:
        s = ex.dumps(e)
        back = ex.loads(s)
        assert back == e
        assert ex.dumps(back) == s  # serialization is a fixed point


def test_json_schema_shapes():
    e = ex.Sum((ex.Scale(0.1, ex.Sin(1.0, 0.0)), ex.Const(3.0)))
    d = ex.to_dict(e)
    assert d["op"] == "sum"
    assert d["args"][0] == {"op": "scale", "c": 0.1, "arg": {"op": "sin", "a": 1.0, "b": 0.0}}
    assert d["args"][1] == {"op": "const", "c": 3.0}
    with pytest.raises(ValueError):
        ex.from_dict({"op": "exp", "a": 1.0})
    with pytest.raises(ValueError):
        ex.from_dict({"op": "sum", "args": []})
