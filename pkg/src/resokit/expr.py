"""Bounded expression trees with sound range and asymptotic enclosures.

Coupling terms are trees over a closed grammar of smooth bounded primitives

    E ::= const(c) | tanh(a*x + b) | atan(a*x + b) | sin(a*x + b)
        | cos(a*x + b) | scale(c, E) | sum(E1, ..., Ek)

so every expression is bounded and locally Lipschitz by construction, and
interval propagation through the tree yields finite enclosures of the global
range and of the limit sets at the ends of the domain.  Enclosures are sound
(they always contain the true values) but may overestimate correlated sums:
``Sum((Sin(), Scale(-1.0, Sin())))`` reports [-2, 2] although the expression
is identically zero.  ``exact`` is False whenever an overestimate is
possible, so a certificate built on these bounds can be conservative but
never unsound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Const",
    "Tanh",
    "Atan",
    "Sin",
    "Cos",
    "Scale",
    "Sum",
    "BoundedExpr",
    "RangeReport",
    "AsymptoticReport",
    "Program",
    "evaluate",
    "evaluate_array",
    "global_range",
    "asymptotics",
    "compile_program",
    "to_dict",
    "from_dict",
    "dumps",
    "loads",
]


@dataclass(frozen=True)
class Const:
    c: float


@dataclass(frozen=True)
class Tanh:
    a: float = 1.0
    b: float = 0.0


@dataclass(frozen=True)
class Atan:
    a: float = 1.0
    b: float = 0.0


@dataclass(frozen=True)
class Sin:
    a: float = 1.0
    b: float = 0.0


@dataclass(frozen=True)
class Cos:
    a: float = 1.0
    b: float = 0.0


@dataclass(frozen=True)
class Scale:
    c: float
    arg: "BoundedExpr"


@dataclass(frozen=True)
class Sum:
    args: tuple["BoundedExpr", ...]

    def __post_init__(self):
        if len(self.args) < 1:
            raise ValueError("Sum needs at least one argument")
        object.__setattr__(self, "args", tuple(self.args))


BoundedExpr = Union[Const, Tanh, Atan, Sin, Cos, Scale, Sum]

_WAVE_RANGE = {Tanh: 1.0, Sin: 1.0, Cos: 1.0, Atan: math.pi / 2.0}
_WAVE_FUN = {Tanh: math.tanh, Atan: math.atan, Sin: math.sin, Cos: math.cos}
_WAVE_UFUNC = {Tanh: np.tanh, Atan: np.arctan, Sin: np.sin, Cos: np.cos}


def evaluate(expr: BoundedExpr, x: float) -> float:
    """Evaluate the expression at a single point. Total on the domain."""
    t = type(expr)
    if t is Const:
        return expr.c
    if t in _WAVE_FUN:
        return _WAVE_FUN[t](expr.a * x + expr.b)
    if t is Scale:
        return expr.c * evaluate(expr.arg, x)
    if t is Sum:
        acc = evaluate(expr.args[0], x)
        for e in expr.args[1:]:
            acc = acc + evaluate(e, x)
        return acc
    raise TypeError(f"not a bounded expression: {expr!r}")


def evaluate_array(expr: BoundedExpr, xs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`evaluate` over a numpy array of points."""
    xs = np.asarray(xs, dtype=float)
    t = type(expr)
    if t is Const:
        return np.full(xs.shape, expr.c)
    if t in _WAVE_UFUNC:
        return _WAVE_UFUNC[t](expr.a * xs + expr.b)
    if t is Scale:
        return expr.c * evaluate_array(expr.arg, xs)
    if t is Sum:
        acc = evaluate_array(expr.args[0], xs)
        for e in expr.args[1:]:
            acc = acc + evaluate_array(e, xs)
        return acc
    raise TypeError(f"not a bounded expression: {expr!r}")


@dataclass(frozen=True)
class RangeReport:
    """Sound enclosure [lower, upper] of an expression's range.

    ``exact`` is True when both bounds are attained or are exact limits
    (e.g. tanh never reaches +/-1 but approaches both).
    """

    lower: float
    upper: float
    exact: bool

    @property
    def span(self) -> float:
        return self.upper - self.lower

    @property
    def abs_bound(self) -> float:
        return max(abs(self.lower), abs(self.upper))


def _range(expr) -> tuple[float, float, bool]:
    t = type(expr)
    if t is Const:
        return expr.c, expr.c, True
    if t in _WAVE_RANGE:
        if expr.a == 0.0:
            v = _WAVE_FUN[t](expr.b)
            return v, v, True
        r = _WAVE_RANGE[t]
        return -r, r, True
    if t is Scale:
        lo, hi, ex = _range(expr.arg)
        if expr.c >= 0.0:
            return expr.c * lo, expr.c * hi, ex
        return expr.c * hi, expr.c * lo, ex
    if t is Sum:
        lo, hi, ex = _range(expr.args[0])
        for e in expr.args[1:]:
            l2, h2, e2 = _range(e)
            # exactness survives only while at most one summand is a
            # non-degenerate interval (no correlation possible)
            ex = ex and e2 and (hi == lo or h2 == l2)
            lo, hi = lo + l2, hi + h2
        return lo, hi, ex
    raise TypeError(f"not a bounded expression: {expr!r}")


def global_range(expr: BoundedExpr) -> RangeReport:
    """Interval propagation through the tree; sound, possibly conservative."""
    lo, hi, ex = _range(expr)
    return RangeReport(lo, hi, ex)


@dataclass(frozen=True)
class AsymptoticReport:
    """Enclosures of [liminf, limsup] at the ends of the domain.

    ``at_minus`` is None on the half-line domain [0, inf).  The two deltas
    are the asymptotic oscillation spans used by the cyclic and radial
    coupling certificates; ``delta_cyclic`` needs both ends and is None on
    the half-line.
    """

    at_plus: tuple[float, float]
    at_minus: tuple[float, float] | None
    delta_cyclic: float | None
    delta_radial: float


def _end(expr, sign: float) -> tuple[float, float]:
    """Enclosure of [liminf, limsup] as x -> sign*infinity."""
    t = type(expr)
    if t is Const:
        return expr.c, expr.c
    if t is Tanh or t is Atan:
        r = _WAVE_RANGE[t]
        if expr.a == 0.0:
            v = _WAVE_FUN[t](expr.b)
            return v, v
        v = r if expr.a * sign > 0.0 else -r
        return v, v
    if t is Sin or t is Cos:
        if expr.a == 0.0:
            v = _WAVE_FUN[t](expr.b)
            return v, v
        return -1.0, 1.0
    if t is Scale:
        lo, hi = _end(expr.arg, sign)
        if expr.c >= 0.0:
            return expr.c * lo, expr.c * hi
        return expr.c * hi, expr.c * lo
    if t is Sum:
        lo, hi = _end(expr.args[0], sign)
        for e in expr.args[1:]:
            l2, h2 = _end(e, sign)
            lo, hi = lo + l2, hi + h2
        return lo, hi
    raise TypeError(f"not a bounded expression: {expr!r}")


def asymptotics(expr: BoundedExpr, domain: str = "full") -> AsymptoticReport:
    """Limit-set enclosures at the domain ends.

    domain="full" analyses both x -> +inf and x -> -inf; domain="half"
    (radial couplings, defined on [0, inf)) only the former.
    """
    if domain not in ("full", "half"):
        raise ValueError(f"domain must be 'full' or 'half', got {domain!r}")
    plus = _end(expr, 1.0)
    if domain == "half":
        return AsymptoticReport(plus, None, None, plus[1] - plus[0])
    minus = _end(expr, -1.0)
    delta_cyc = max(plus[1], minus[1]) - min(plus[0], minus[0])
    return AsymptoticReport(plus, minus, delta_cyc, plus[1] - plus[0])


# --- flat postfix programs for the integration kernels ---------------------

OP_CONST = 0
OP_TANH = 1
OP_ATAN = 2
OP_SIN = 3
OP_COS = 4
OP_MUL = 5
OP_ADD = 6

_WAVE_OP = {Tanh: OP_TANH, Atan: OP_ATAN, Sin: OP_SIN, Cos: OP_COS}


@dataclass(frozen=True, eq=False)
class Program:
    """Postfix opcode form of an expression, evaluated by a stack machine."""

    code: np.ndarray
    pa: np.ndarray
    pb: np.ndarray
    stack_size: int


def compile_program(expr: BoundedExpr) -> Program:
    code: list[int] = []
    pa: list[float] = []
    pb: list[float] = []

    def emit(e):
        t = type(e)
        if t is Const:
            code.append(OP_CONST)
            pa.append(e.c)
            pb.append(0.0)
        elif t in _WAVE_OP:
            code.append(_WAVE_OP[t])
            pa.append(e.a)
            pb.append(e.b)
        elif t is Scale:
            emit(e.arg)
            code.append(OP_MUL)
            pa.append(e.c)
            pb.append(0.0)
        elif t is Sum:
            emit(e.args[0])
            for a in e.args[1:]:
                emit(a)
                code.append(OP_ADD)
                pa.append(0.0)
                pb.append(0.0)
        else:
            raise TypeError(f"not a bounded expression: {e!r}")

    emit(expr)
    sp = depth = 0
    for op in code:
        if op in (OP_CONST, OP_TANH, OP_ATAN, OP_SIN, OP_COS):
            sp += 1
            depth = max(depth, sp)
        elif op == OP_ADD:
            sp -= 1
    return Program(
        np.asarray(code, dtype=np.int32),
        np.asarray(pa, dtype=np.float64),
        np.asarray(pb, dtype=np.float64),
        depth,
    )


# --- JSON -------------------------------------------------------------------

_OP_NAME = {Const: "const", Tanh: "tanh", Atan: "atan", Sin: "sin", Cos: "cos"}


def to_dict(expr: BoundedExpr) -> dict:
    t = type(expr)
    if t is Const:
        return {"op": "const", "c": expr.c}
    if t in (Tanh, Atan, Sin, Cos):
        return {"op": _OP_NAME[t], "a": expr.a, "b": expr.b}
    if t is Scale:
        return {"op": "scale", "c": expr.c, "arg": to_dict(expr.arg)}
    if t is Sum:
        return {"op": "sum", "args": [to_dict(a) for a in expr.args]}
    raise TypeError(f"not a bounded expression: {expr!r}")


def from_dict(d: dict) -> BoundedExpr:
    try:
        op = d["op"]
    except (TypeError, KeyError):
        raise ValueError(f"expression node must be an object with 'op': {d!r}")
    if op == "const":
        return Const(float(d["c"]))
    if op in ("tanh", "atan", "sin", "cos"):
        cls = {"tanh": Tanh, "atan": Atan, "sin": Sin, "cos": Cos}[op]
        return cls(float(d.get("a", 1.0)), float(d.get("b", 0.0)))
    if op == "scale":
        return Scale(float(d["c"]), from_dict(d["arg"]))
    if op == "sum":
        args = d["args"]
        if not args:
            raise ValueError("'sum' needs at least one argument")
        return Sum(tuple(from_dict(a) for a in args))
    raise ValueError(f"unknown expression op {op!r}")


def dumps(expr: BoundedExpr) -> str:
    return json.dumps(to_dict(expr))


def loads(s: str) -> BoundedExpr:
    return from_dict(json.loads(s))
