"""Unboundedness certificates, margins, and escape-region construction.

Four sufficient conditions are checked, each comparing the forcing's
resonant Fourier gain against a measure of the coupling size:

* ``global``  per component j: 2*(sup h_j - inf h_j) < gain_j for SOME
  resonant j; every solution's j-th component is then unbounded in both
  time directions.
* ``matrix``  x'' + A x + h(x) = p(t): sup|h| * int|v| < |int <p, v>| for a
  periodic mode v of the linear part; every solution is unbounded.
* ``cyclic``  2*delta_h_j < gain_j for EVERY j, where delta_h_j measures the
  asymptotic oscillation of h_j at both infinities; solutions started in a
  product of explicit plane regions escape.
* ``radial``  like cyclic but with h_j(|x|), delta at +infinity only, and an
  existential quantifier over j.

All inequalities are certified only with slack above a strictness tolerance,
and all coupling bounds come from the sound (possibly conservative) interval
analysis, so a "certified" verdict never rests on an underestimated
coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from . import forcing as fc
from .integrate import sigma_bound
from .system import (
    CyclicCoupling,
    MatrixSpec,
    RadialCoupling,
    SystemSpec,
    component_range,
    jacobi_eigen,
    periodic_mode,
    resonant_integer,
    validate_spec,
)

TWO_PI = 2.0 * math.pi
STRICT_TOL = 1e-9

__all__ = [
    "ComponentCheck",
    "MatrixWitness",
    "Margin",
    "CertificateReport",
    "ComponentRegions",
    "RegionSet",
    "SearchFailureError",
    "DegenerateWindowError",
    "lyapunov_value",
    "vbar",
    "check",
    "check_global_scalar",
    "check_global_matrix",
    "check_cyclic",
    "check_radial",
    "threshold_amplitude",
    "build_regions",
    "product_membership",
]


class SearchFailureError(RuntimeError):
    """Amplitude search exceeded its cap without meeting the bound."""


class DegenerateWindowError(ValueError):
    """Phase window too narrow to carve two distinct half-planes."""


def lyapunov_value(n: float, phi: float, zeta, eta):
    """Section Lyapunov form V(zeta, eta) = eta sin(phi) - n zeta cos(phi)."""
    return eta * math.sin(phi) - n * zeta * math.cos(phi)


def vbar(n: float, amp: float) -> float:
    """max of V over the disk |(zeta, eta)| <= amp and all phases: amp*max(1, n)."""
    return amp * max(1.0, n)


@dataclass
class ComponentCheck:
    """Per-component inequality row of a certificate."""

    j: int  # 0-based
    resonant: bool
    n_int: int | None
    gain: float | None
    span: float | None  # global span or asymptotic delta, per criterion
    slack: float | None  # gain - 2*span
    certified: bool
    gamma: float | None = None
    phi0: float | None = None
    window: fc.PhaseWindow | None = None

    def to_dict(self) -> dict:
        d = {
            "j": self.j + 1,
            "resonant": self.resonant,
            "n": self.n_int,
            "gain": self.gain,
            "span": self.span,
            "slack": self.slack,
            "certified": self.certified,
            "gamma": self.gamma,
            "phi0": self.phi0,
        }
        if self.window is not None:
            d["window"] = {
                "center": self.window.center,
                "half_width": self.window.half_width,
                "threshold": self.window.threshold,
            }
        return d


@dataclass
class MatrixWitness:
    """Mode-level witness for the matrix certificate."""

    mode_index: int
    n: int
    eigenvalue: float
    q: tuple[float, ...]
    phi: float
    c: float
    lhs: float  # sup|h| * int |v|
    rhs: float  # |int <p, v>|
    sup_h: float
    gamma_prime: float

    def to_dict(self) -> dict:
        return {
            "mode_index": self.mode_index + 1,
            "n": self.n,
            "eigenvalue": self.eigenvalue,
            "q": list(self.q),
            "phi": self.phi,
            "c": self.c,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "sup_h": self.sup_h,
            "gamma_prime": self.gamma_prime,
        }


@dataclass
class Margin:
    gamma: float | None = None
    gamma_prime: float | None = None


@dataclass
class CertificateReport:
    criterion: str  # "global" | "matrix" | "cyclic" | "radial"
    certified: bool
    components: tuple[ComponentCheck, ...] = ()
    margin: Margin = field(default_factory=Margin)
    matrix: MatrixWitness | None = None

    def certified_components(self) -> tuple[ComponentCheck, ...]:
        return tuple(c for c in self.components if c.certified)

    def to_dict(self) -> dict:
        d = {
            "criterion": self.criterion,
            "certified": self.certified,
            "components": [c.to_dict() for c in self.components],
            "gamma": self.margin.gamma,
            "gamma_prime": self.margin.gamma_prime,
        }
        if self.matrix is not None:
            d["matrix"] = self.matrix.to_dict()
        return d


def _require_valid(spec) -> None:
    rep = validate_spec(spec)
    if not rep.ok:
        raise ValueError("invalid system: " + "; ".join(rep.problems))


def _gain_phase_row(spec, j: int, span: float):
    """Common gain/slack/phase bookkeeping for one component."""
    nj = spec.n[j]
    n_int = resonant_integer(nj)
    if n_int is None:
        return ComponentCheck(j, False, None, None, span, None, False)
    gain = fc.fourier_gain(spec.p[j], n_int)
    slack = gain - 2.0 * span
    certified = slack > STRICT_TOL
    phi0 = fc.optimal_phase(spec.p[j], n_int) if gain > 0.0 else None
    return ComponentCheck(j, True, n_int, gain, span, slack, certified, None, phi0)


def check_global_scalar(spec: SystemSpec) -> CertificateReport:
    """Span condition: some resonant j with 2*(sup h_j - inf h_j) < gain_j.

    Works for any coupling shape since only the global range of h_j enters.
    Conclusion strength (both time directions, every solution) is per
    certified component.
    """
    _require_valid(spec)
    rows = []
    for j in range(spec.d):
        row = _gain_phase_row(spec, j, component_range(spec, j).span)
        if row.certified:
            row.gamma = row.slack
        rows.append(row)
    certified = any(r.certified for r in rows)
    best = max((r.gamma for r in rows if r.certified), default=None)
    return CertificateReport("global", certified, tuple(rows), Margin(gamma=best))


def check_cyclic(spec: SystemSpec) -> CertificateReport:
    """Asymptotic condition 2*delta_h_j < gain_j for every j (cyclic coupling)."""
    _require_valid(spec)
    if not isinstance(spec.coupling, CyclicCoupling):
        raise TypeError("cyclic certificate needs a cyclic coupling")
    rows = []
    for j in range(spec.d):
        delta = ex.asymptotics(spec.coupling.terms[j], "full").delta_cyclic
        rows.append(_gain_phase_row(spec, j, delta))
    certified = all(r.certified for r in rows)
    gamma = None
    if certified:
        gamma = 0.25 * min(r.slack for r in rows)
        for r in rows:
            r.gamma = gamma
            r.window = fc.phase_window(
                spec.p[r.j], r.n_int, 2.0 * (r.span + gamma)
            )
    return CertificateReport("cyclic", certified, tuple(rows), Margin(gamma=gamma))


def check_radial(spec: SystemSpec) -> CertificateReport:
    """Asymptotic condition 2*delta_h_j < gain_j for some j (radial coupling)."""
    _require_valid(spec)
    if not isinstance(spec.coupling, RadialCoupling):
        raise TypeError("radial certificate needs a radial coupling")
    rows = []
    for j in range(spec.d):
        delta = ex.asymptotics(spec.coupling.terms[j], "half").delta_radial
        row = _gain_phase_row(spec, j, delta)
        if row.certified:
            row.gamma = 0.25 * row.slack
            row.window = fc.phase_window(
                spec.p[j], row.n_int, 2.0 * (row.span + row.gamma)
            )
        rows.append(row)
    certified = any(r.certified for r in rows)
    best = max((r.gamma for r in rows if r.certified), default=None)
    return CertificateReport("radial", certified, tuple(rows), Margin(gamma=best))


def _sup_h_vector(spec) -> float:
    """Euclidean overestimate of sup |h| from per-component bounds."""
    return math.sqrt(
        sum(component_range(spec, j).abs_bound ** 2 for j in range(spec.d))
    )


def check_global_matrix(
    mspec: MatrixSpec,
    mode: int | None = None,
    phi: float | None = None,
    c: float = 1.0,
) -> CertificateReport:
    """Mode condition sup|h| * int|v| < |int <p, v>| for x'' + Ax + h = p.

    ``mode`` is an index into the ascending eigenvalues (must be resonant;
    None picks the resonant mode with the largest slack), ``phi`` the phase
    of v(t) = c sin(n t + phi) q (None maximizes the right-hand side in
    closed form).  The verdict is homogeneous in c.  The witness phase is
    normalized so the pairing integral is nonnegative, flipping v's sign if
    needed.
    """
    _require_valid(mspec)
    dec = jacobi_eigen(mspec.matrix())
    if not dec.resonant_modes:
        raise ValueError("no eigenvalue of the form n^2 with integer n >= 1")
    sup_h = _sup_h_vector(mspec)
    candidates = (
        dec.resonant_modes
        if mode is None
        else tuple(m for m in dec.resonant_modes if m[0] == mode)
    )
    if not candidates:
        raise ValueError(
            f"eigenvalue index {mode} is not resonant; "
            f"resonant modes: {dec.resonant_modes}"
        )
    best = None
    for idx, n in candidates:
        q = dec.q[:, idx]
        an = np.array([p.coeff(n)[0] for p in mspec.p])
        bn = np.array([p.coeff(n)[1] for p in mspec.p])
        qa = float(q @ an)
        qb = float(q @ bn)
        if phi is None:
            ph = math.atan2(qa, qb) % TWO_PI if (qa, qb) != (0.0, 0.0) else 0.0
        else:
            ph = phi % TWO_PI
        ipv = c * math.pi * (qb * math.cos(ph) + qa * math.sin(ph))
        if ipv < 0.0:  # use -v instead, keeping the pairing nonnegative
            ph = (ph + math.pi) % TWO_PI
            ipv = -ipv
        lhs = sup_h * 4.0 * c
        cand = (ipv - lhs, idx, n, ph, ipv, lhs)
        if best is None or cand[0] > best[0]:
            best = cand
    slack, idx, n, ph, rhs, lhs = best
    certified = slack > STRICT_TOL * max(1.0, c)
    witness = MatrixWitness(
        idx,
        n,
        float(dec.eigenvalues[idx]),
        tuple(float(v) for v in dec.q[:, idx]),
        ph,
        c,
        lhs,
        rhs,
        sup_h,
        rhs - lhs,
    )
    return CertificateReport(
        "matrix",
        certified,
        (),
        Margin(gamma_prime=rhs - lhs if certified else None),
        witness,
    )


def check(spec, criterion: str = "auto", **kw) -> CertificateReport:
    """Dispatch on the coupling shape (or an explicit criterion name)."""
    if criterion == "auto":
        if isinstance(spec, MatrixSpec):
            criterion = "matrix"
        elif isinstance(spec.coupling, CyclicCoupling):
            criterion = "cyclic"
        elif isinstance(spec.coupling, RadialCoupling):
            criterion = "radial"
        else:
            criterion = "global"
    if criterion == "global":
        return check_global_scalar(spec)
    if criterion == "cyclic":
        return check_cyclic(spec)
    if criterion == "radial":
        return check_radial(spec)
    if criterion == "matrix":
        return check_global_matrix(spec, **kw)
    raise ValueError(f"unknown criterion {criterion!r}")


# --- amplitude threshold search ----------------------------------------------


def threshold_amplitude(
    spec: SystemSpec,
    j: int,
    gamma: float,
    initial: float = 1.0,
    max_amplitude: float = 1e12,
    panels: int = 4096,
    n_omega: int = 64,
    n_phi: int = 64,
) -> float:
    """Empirical amplitude above which the coupling integral obeys its bound.

    Doubling search over a structured family of one-period component motions
    amp*sin(n t + omega) + sigma(t), sigma drawn from constant-plus-first-
    harmonic profiles within the closed-form residual bound: the candidate
    amplitude is accepted once

        max over family of  int_0^{2pi} h_j(arg(t)) sin(n_j t + phi) dt
            <= 2*delta_h_j + gamma    for the whole phase grid,

    and twice the accepted amplitude is returned as a safety factor.  This
    samples a worst case, it does not prove the bound; downstream checks are
    simulation-based.  For radial couplings the argument is |x| floored by
    the decomposed component, with a few other-component amplitudes mixed in.
    """
    if isinstance(spec.coupling, CyclicCoupling):
        term = spec.coupling.terms[j]
        delta = ex.asymptotics(term, "full").delta_cyclic
        n_arg = spec.n[(j + 1) % spec.d]
        radial = False
    elif isinstance(spec.coupling, RadialCoupling):
        term = spec.coupling.terms[j]
        delta = ex.asymptotics(term, "half").delta_radial
        n_arg = spec.n[j]
        radial = True
    else:
        raise TypeError("threshold search applies to cyclic or radial couplings")
    nj = resonant_integer(spec.n[j])
    if nj is None:
        raise ValueError(f"component {j + 1} is not resonant")
    target = 2.0 * delta + gamma

    ts = np.linspace(0.0, TWO_PI, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= TWO_PI / (3.0 * panels)
    w_sin = w * np.sin(nj * ts)
    w_cos = w * np.cos(nj * ts)
    omegas = np.arange(n_omega) * (TWO_PI / n_omega)
    phis = np.arange(n_phi) * (TWO_PI / n_phi)
    cph = np.cos(phis)
    sph = np.sin(phis)

    c2 = sigma_bound(spec)
    c0s = (-0.5 * c2, 0.0, 0.5 * c2)
    c1s = (0.0, 0.25 * c2, 0.5 * c2)
    psis = (0.0, TWO_PI / 3.0, 2.0 * TWO_PI / 3.0)
    sigmas = [c0 + c1 * np.sin(ts + psi) for c0 in c0s for c1 in c1s for psi in psis]
    # for radial arguments |x| >= |x_j|: mix in a few other-component sizes
    mixes = (0.0, 1.0, 1e3) if radial else (0.0,)
    mix_wave = np.sin(ts)

    def family_max(amp: float) -> float:
        base = amp * np.sin(n_arg * ts[None, :] + omegas[:, None])
        worst = -math.inf
        for sg in sigmas:
            u = base + sg[None, :]
            for b in mixes:
                if radial:
                    arg = np.hypot(u, b * mix_wave) if b else np.abs(u)
                else:
                    arg = u
                vals = ex.evaluate_array(term, arg)
                s_int = vals @ w_sin
                c_int = vals @ w_cos
                resp = s_int[:, None] * cph[None, :] + c_int[:, None] * sph[None, :]
                worst = max(worst, float(resp.max()))
        return worst

    amp = float(initial)
    while True:
        if family_max(amp) <= target:
            return 2.0 * amp
        amp *= 2.0
        if amp > max_amplitude:
            raise SearchFailureError(
                f"no amplitude up to {max_amplitude:g} met the coupling bound "
                f"(target {target:g})"
            )


# --- escape regions -----------------------------------------------------------


@dataclass(eq=False)
class ComponentRegions:
    """Escape half-plane pairs for one component's phase plane.

    ``plus`` is the union {V_phi1 > level} or {V_phi2 > level}; ``minus`` its
    reflection through the origin; the complement of their union is the
    closed parallelogram with the stored vertices.
    """

    j: int
    n: float
    phi1: float
    phi2: float
    level: float
    amp: float
    vertices: np.ndarray  # (4, 2), traversal order

    def values(self, zeta, eta):
        v1 = eta * math.sin(self.phi1) - self.n * zeta * math.cos(self.phi1)
        v2 = eta * math.sin(self.phi2) - self.n * zeta * math.cos(self.phi2)
        return v1, v2

    def in_plus(self, zeta, eta):
        v1, v2 = self.values(zeta, eta)
        return (v1 > self.level) | (v2 > self.level)

    def in_minus(self, zeta, eta):
        v1, v2 = self.values(zeta, eta)
        return (v1 < -self.level) | (v2 < -self.level)

    def in_parallelogram(self, zeta, eta):
        v1, v2 = self.values(zeta, eta)
        return (np.abs(v1) <= self.level) & (np.abs(v2) <= self.level)

    def to_dict(self) -> dict:
        return {
            "j": self.j + 1,
            "n": self.n,
            "phi1": self.phi1,
            "phi2": self.phi2,
            "vbar": self.level,
            "amplitude": self.amp,
            "vertices": [list(map(float, v)) for v in self.vertices],
        }


@dataclass(eq=False)
class RegionSet:
    d: int
    components: dict[int, ComponentRegions]
    thresholds: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "thresholds": {str(j + 1): a for j, a in self.thresholds.items()},
            "components": [r.to_dict() for r in self.components.values()],
        }


def _vertices(n: float, phi1: float, phi2: float, level: float) -> np.ndarray:
    m = np.array(
        [
            [-n * math.cos(phi1), math.sin(phi1)],
            [-n * math.cos(phi2), math.sin(phi2)],
        ]
    )
    out = []
    for sa, sb in ((1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)):
        out.append(np.linalg.solve(m, np.array([sa * level, sb * level])))
    return np.array(out)


def build_regions(spec, report: CertificateReport, thresholds) -> RegionSet:
    """Carve the per-component escape regions from a certified report.

    ``thresholds`` is the amplitude from :func:`threshold_amplitude`, either
    one value or a dict per 0-based component.  Cyclic certificates use the
    max over components for every level (the growth recursion needs a common
    amplitude floor); radial certificates keep per-component amplitudes.
    """
    if not report.certified:
        raise ValueError("cannot build regions from a non-certified report")
    rows = [r for r in report.components if r.certified and r.window is not None]
    if not rows:
        raise ValueError("report carries no phase windows")
    if isinstance(thresholds, dict):
        amp_by_j = {r.j: float(thresholds[r.j]) for r in rows}
    else:
        amp_by_j = {r.j: float(thresholds) for r in rows}
    if report.criterion == "cyclic":
        common = max(amp_by_j.values())
        levels = {j: common for j in amp_by_j}
    else:
        levels = amp_by_j
    comps = {}
    for r in rows:
        if r.window.half_width < 1e-6:
            raise DegenerateWindowError(
                f"window of component {r.j + 1} is too narrow"
            )
        phi1, phi2 = r.window.phases()
        level = vbar(r.n_int, levels[r.j])
        comps[r.j] = ComponentRegions(
            r.j,
            float(r.n_int),
            phi1,
            phi2,
            level,
            levels[r.j],
            _vertices(r.n_int, phi1, phi2, level),
        )
    return RegionSet(spec.d, comps, amp_by_j)


_PRODUCT_SETS = ("C", "C+", "C-", "C+&C-")


def product_membership(regions: RegionSet, state, which: str) -> bool:
    """Membership of a full state in the product escape sets.

    ``which``: "C" (some escape direction per component), "C+" (all future),
    "C-" (all past), or "C+&C-" (both).  Requires regions for every
    component.
    """
    if which not in _PRODUCT_SETS:
        raise ValueError(f"unknown product set {which!r}; use one of {_PRODUCT_SETS}")
    if set(regions.components) != set(range(regions.d)):
        raise ValueError("product membership needs regions for every component")
    for j in range(regions.d):
        r = regions.components[j]
        zeta = float(state.x[j])
        eta = float(state.v[j])
        p = bool(r.in_plus(zeta, eta))
        m = bool(r.in_minus(zeta, eta))
        ok = {
            "C": p or m,
            "C+": p,
            "C-": m,
            "C+&C-": p and m,
        }[which]
        if not ok:
            return False
    return True
