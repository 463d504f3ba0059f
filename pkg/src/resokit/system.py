"""Coupled resonant oscillator systems and their linear structure.

Supported shapes, all with 2*pi-periodic forcing on each component:

* component form   x_j'' + n_j^2 x_j + h_j(...) = p_j(t), where the coupling
  argument is x_{j+1} (cyclic, indices wrap), |x| (radial), or a separable
  sum of single-variable terms (general);
* matrix form      x'' + A x + h(x) = p(t) with A symmetric positive
  definite and h separable per component.

The separable restriction for general couplings keeps sup/inf computable
term by term, which is what the certificates consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from . import forcing as fc

__all__ = [
    "CyclicCoupling",
    "RadialCoupling",
    "GeneralCoupling",
    "VarTerm",
    "SystemSpec",
    "MatrixSpec",
    "ValidationReport",
    "EigenDecomposition",
    "PeriodicMode",
    "NotSymmetricError",
    "NonResonantModeError",
    "RESONANCE_TOL",
    "validate_spec",
    "is_resonant",
    "resonant_integer",
    "vector_field",
    "coupling_values",
    "component_range",
    "jacobi_eigen",
    "periodic_mode",
    "system_to_dict",
    "system_from_dict",
]

RESONANCE_TOL = 1e-9


class NotSymmetricError(ValueError):
    pass


class NonResonantModeError(ValueError):
    pass


@dataclass(frozen=True)
class VarTerm:
    """One additive term g(x_var) of a separable coupling component."""

    var: int
    expr: ex.BoundedExpr


@dataclass(frozen=True)
class CyclicCoupling:
    terms: tuple[ex.BoundedExpr, ...]  # h_j applied to x_{j+1}, wrapping

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class RadialCoupling:
    terms: tuple[ex.BoundedExpr, ...]  # h_j applied to |x|, domain [0, inf)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class GeneralCoupling:
    terms: tuple[tuple[VarTerm, ...], ...]  # h_j(x) = sum_i g_{j,i}(x_i)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(tuple(ts) for ts in self.terms))


Coupling = CyclicCoupling | RadialCoupling | GeneralCoupling


@dataclass(frozen=True)
class SystemSpec:
    d: int
    n: tuple[float, ...]
    coupling: Coupling
    p: tuple[fc.TrigPoly, ...]

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(float(v) for v in self.n))
        object.__setattr__(self, "p", tuple(self.p))


@dataclass(frozen=True)
class MatrixSpec:
    """x'' + A x + h(x) = p(t); A stored row-wise as nested tuples."""

    a: tuple[tuple[float, ...], ...]
    h: tuple[tuple[VarTerm, ...], ...]
    p: tuple[fc.TrigPoly, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "a", tuple(tuple(float(v) for v in row) for row in self.a)
        )
        object.__setattr__(self, "h", tuple(tuple(ts) for ts in self.h))
        object.__setattr__(self, "p", tuple(self.p))

    @property
    def d(self) -> int:
        return len(self.a)

    def matrix(self) -> np.ndarray:
        return np.array(self.a, dtype=float)


def is_resonant(n: float) -> bool:
    return abs(n - round(n)) <= RESONANCE_TOL and round(n) >= 1


def resonant_integer(n: float) -> int | None:
    return int(round(n)) if is_resonant(n) else None


@dataclass
class ValidationReport:
    ok: bool
    problems: list[str]
    resonant: list[bool]
    n_int: list[int | None]


def validate_spec(spec: SystemSpec | MatrixSpec) -> ValidationReport:
    """Structural invariants plus per-component resonance flags."""
    problems: list[str] = []
    if isinstance(spec, MatrixSpec):
        d = spec.d
        a = spec.matrix()
        if a.shape != (d, d):
            problems.append(f"matrix must be square, got shape {a.shape}")
        else:
            scale = max(1.0, float(np.max(np.abs(a))))
            if float(np.max(np.abs(a - a.T))) > 1e-12 * scale:
                problems.append("matrix is not symmetric within 1e-12")
            else:
                dec = jacobi_eigen(a)
                if dec.eigenvalues[0] <= 0.0:
                    problems.append("matrix is not positive definite")
        if len(spec.h) != d:
            problems.append(f"expected {d} coupling components, got {len(spec.h)}")
        if len(spec.p) != d:
            problems.append(f"expected {d} forcings, got {len(spec.p)}")
        for j, terms in enumerate(spec.h):
            for t in terms:
                if not 0 <= t.var < d:
                    problems.append(f"h[{j + 1}] references x_{t.var + 1} outside 1..{d}")
        res: list[bool] = []
        n_int: list[int | None] = []
        if not problems:
            dec = jacobi_eigen(a)
            for lam in dec.eigenvalues:
                m = resonant_integer(math.sqrt(lam)) if lam > 0 else None
                res.append(m is not None)
                n_int.append(m)
        return ValidationReport(not problems, problems, res, n_int)

    d = spec.d
    if d < 1:
        problems.append(f"dimension must be >= 1, got {d}")
    if len(spec.n) != d:
        problems.append(f"expected {d} frequencies, got {len(spec.n)}")
    if any(not (n > 0) for n in spec.n):
        problems.append("all frequencies must be positive")
    if len(spec.p) != d:
        problems.append(f"expected {d} forcings, got {len(spec.p)}")
    terms = spec.coupling.terms
    if len(terms) != d:
        problems.append(f"expected {d} coupling components, got {len(terms)}")
    if isinstance(spec.coupling, GeneralCoupling):
        for j, ts in enumerate(terms):
            for t in ts:
                if not 0 <= t.var < d:
                    problems.append(f"h[{j + 1}] references x_{t.var + 1} outside 1..{d}")
    res = [is_resonant(n) for n in spec.n] if len(spec.n) == d else []
    n_int = [resonant_integer(n) for n in spec.n] if len(spec.n) == d else []
    return ValidationReport(not problems, problems, res, n_int)


def _coupling_value(spec, j: int, x: np.ndarray) -> float:
    c = spec.coupling if isinstance(spec, SystemSpec) else None
    if isinstance(spec, MatrixSpec):
        return sum(ex.evaluate(t.expr, x[t.var]) for t in spec.h[j])
    if isinstance(c, CyclicCoupling):
        return ex.evaluate(c.terms[j], x[(j + 1) % spec.d])
    if isinstance(c, RadialCoupling):
        return ex.evaluate(c.terms[j], float(np.linalg.norm(x)))
    return sum(ex.evaluate(t.expr, x[t.var]) for t in c.terms[j])


def coupling_values(spec, j: int, xs: np.ndarray) -> np.ndarray:
    """h_j evaluated along an array of position rows (shape (m, d))."""
    xs = np.asarray(xs, dtype=float)
    if isinstance(spec, MatrixSpec) or isinstance(spec.coupling, GeneralCoupling):
        terms = spec.h[j] if isinstance(spec, MatrixSpec) else spec.coupling.terms[j]
        out = np.zeros(xs.shape[0])
        for t in terms:
            out += ex.evaluate_array(t.expr, xs[:, t.var])
        return out
    c = spec.coupling
    if isinstance(c, CyclicCoupling):
        return ex.evaluate_array(c.terms[j], xs[:, (j + 1) % spec.d])
    return ex.evaluate_array(c.terms[j], np.sqrt(np.sum(xs * xs, axis=1)))


def vector_field(spec, t: float, x: np.ndarray, v: np.ndarray):
    """Reference first-order right-hand side: dx = v, dv = p - (stiffness) - h.

    Tree-walking implementation used as the oracle for the compiled kernels.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    d = spec.d
    pvals = np.array([fc.evaluate(spec.p[j], t) for j in range(d)])
    hvals = np.array([_coupling_value(spec, j, x) for j in range(d)])
    if isinstance(spec, MatrixSpec):
        stiff = spec.matrix() @ x
    else:
        stiff = np.array([spec.n[j] ** 2 * x[j] for j in range(d)])
    return v.copy(), pvals - stiff - hvals


def component_range(spec, j: int) -> ex.RangeReport:
    """Sound range of h_j over its whole domain, any coupling shape."""
    if isinstance(spec, MatrixSpec) or isinstance(spec.coupling, GeneralCoupling):
        terms = spec.h[j] if isinstance(spec, MatrixSpec) else spec.coupling.terms[j]
        lo = hi = 0.0
        exact = True
        for t in terms:
            r = ex.global_range(t.expr)
            exact = exact and r.exact and (hi == lo or r.span == 0.0)
            lo, hi = lo + r.lower, hi + r.upper
        return ex.RangeReport(lo, hi, exact)
    return ex.global_range(spec.coupling.terms[j])


# --- symmetric eigenstructure ------------------------------------------------


@dataclass(eq=False)
class EigenDecomposition:
    """Q A Q^T = diag(eigenvalues); columns of q are unit eigenvectors.

    Eigenvalues ascending; each eigenvector's first nonzero entry is made
    positive so the decomposition is deterministic.  ``resonant_modes`` lists
    (column index, n) pairs with eigenvalue n^2 for integer n >= 1.
    """

    q: np.ndarray
    eigenvalues: np.ndarray
    resonant_modes: tuple[tuple[int, int], ...]


def jacobi_eigen(a) -> EigenDecomposition:
    """Cyclic Jacobi rotations, row-major upper-triangle pivot order.

    Sweeps until the off-diagonal Frobenius mass falls below 1e-14 times the
    Frobenius norm of the input.
    """
    a = np.array(a, dtype=float)
    d = a.shape[0]
    if a.shape != (d, d):
        raise NotSymmetricError(f"matrix must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if float(np.max(np.abs(a - a.T))) > 1e-12 * scale:
        raise NotSymmetricError("matrix is not symmetric within 1e-12")
    norm = float(np.linalg.norm(a))
    q = np.eye(d)
    if d > 1 and norm > 0.0:
        tol = 1e-14 * norm
        for _ in range(100):
            off = math.sqrt(float(np.sum(np.tril(a, -1) ** 2) * 2.0))
            if off < tol:
                break
            for p in range(d - 1):
                for r in range(p + 1, d):
                    apq = a[p, r]
                    if apq == 0.0:
                        continue
                    theta = (a[r, r] - a[p, p]) / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (
                        abs(theta) + math.sqrt(theta * theta + 1.0)
                    )
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    rot = np.eye(d)
                    rot[p, p] = rot[r, r] = c
                    rot[p, r] = s
                    rot[r, p] = -s
                    a = rot.T @ a @ rot
                    q = q @ rot
        else:
            raise RuntimeError("Jacobi sweeps did not converge")
    lam = np.diag(a).copy()
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    q = q[:, order]
    for k in range(d):
        col = q[:, k]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if len(nz) and col[nz[0]] < 0.0:
            q[:, k] = -col
    modes = []
    for k in range(d):
        if lam[k] > 0.0:
            m = resonant_integer(math.sqrt(lam[k]))
            if m is not None:
                modes.append((k, m))
    return EigenDecomposition(q, lam, tuple(modes))


@dataclass(frozen=True, eq=False)
class PeriodicMode:
    """v(t) = c sin(n t + phi) q with A q = n^2 q, |q| = 1."""

    q: np.ndarray
    n: int
    phi: float
    c: float

    def value(self, t):
        t = np.asarray(t, dtype=float)
        s = self.c * np.sin(self.n * t + self.phi)
        return np.multiply.outer(s, self.q) if s.ndim else s * self.q

    @property
    def v0(self) -> np.ndarray:
        return self.c * math.sin(self.phi) * self.q

    @property
    def v0_prime(self) -> np.ndarray:
        return self.c * self.n * math.cos(self.phi) * self.q


def periodic_mode(
    dec: EigenDecomposition, mode: int, phi: float = 0.0, c: float = 1.0
) -> PeriodicMode:
    """Periodic solution of x'' + A x = 0 along a resonant eigenvector."""
    for idx, n in dec.resonant_modes:
        if idx == mode:
            if not c > 0:
                raise ValueError("amplitude must be positive")
            return PeriodicMode(dec.q[:, idx].copy(), n, phi, c)
    raise NonResonantModeError(
        f"eigenvalue index {mode} is not resonant; resonant modes: "
        f"{dec.resonant_modes}"
    )


# --- JSON fragments ----------------------------------------------------------


def _terms_to_dict(terms: tuple[tuple[VarTerm, ...], ...]) -> list:
    return [
        [{"var": t.var + 1, "expr": ex.to_dict(t.expr)} for t in ts] for ts in terms
    ]


def _terms_from_dict(rows) -> tuple[tuple[VarTerm, ...], ...]:
    out = []
    for ts in rows:
        out.append(tuple(VarTerm(int(t["var"]) - 1, ex.from_dict(t["expr"])) for t in ts))
    return tuple(out)


def system_to_dict(spec) -> dict:
    if isinstance(spec, MatrixSpec):
        return {
            "d": spec.d,
            "coupling": {"kind": "matrix", "terms": _terms_to_dict(spec.h)},
            "p": [fc.to_dict(p) for p in spec.p],
            "A": [list(row) for row in spec.a],
        }
    c = spec.coupling
    if isinstance(c, CyclicCoupling):
        cd = {"kind": "cyclic", "terms": [ex.to_dict(t) for t in c.terms]}
    elif isinstance(c, RadialCoupling):
        cd = {"kind": "radial", "terms": [ex.to_dict(t) for t in c.terms]}
    else:
        cd = {"kind": "general", "terms": _terms_to_dict(c.terms)}
    return {
        "d": spec.d,
        "n": list(spec.n),
        "coupling": cd,
        "p": [fc.to_dict(p) for p in spec.p],
    }


def system_from_dict(d: dict):
    dim = int(d["d"])
    kind = d["coupling"]["kind"]
    ps = tuple(fc.from_dict(p) for p in d["p"])
    rows = d["coupling"]["terms"]
    if kind == "matrix":
        a = tuple(tuple(float(v) for v in row) for row in d["A"])
        return MatrixSpec(a, _terms_from_dict(rows), ps)
    if kind == "general":
        coupling: Coupling = GeneralCoupling(_terms_from_dict(rows))
    elif kind == "cyclic":
        coupling = CyclicCoupling(tuple(ex.from_dict(t) for t in rows))
    elif kind == "radial":
        coupling = RadialCoupling(tuple(ex.from_dict(t) for t in rows))
    else:
        raise ValueError(f"unknown coupling kind {kind!r}")
    n = tuple(float(v) for v in d["n"])
    return SystemSpec(dim, n, coupling, ps)
