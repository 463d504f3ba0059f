"""Trajectory-level verification of the quantitative growth estimates.

Everything here measures, along computed trajectories, the inequalities the
certificates guarantee: the one-period section identity for the Lyapunov
form, the per-period growth >= k*Gamma, the energy differential inequality
|E'| <= E with its exponential (Gronwall) floor, and an escape
classification of section radii.  These are numerical observations at
finite horizons, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import forcing as fc
from .certify import CertificateReport, MatrixWitness, lyapunov_value
from .integrate import SectionTrace, State, flow_states, section_trace
from .system import MatrixSpec, component_range, coupling_values

TWO_PI = 2.0 * math.pi

__all__ = [
    "GrowthRow",
    "GrowthReport",
    "EnergyReport",
    "Classification",
    "delta_v_identity_check",
    "growth_check",
    "matrix_growth_check",
    "energy_check",
    "matrix_energy_check",
    "classify_trajectory",
]


def delta_v_identity_check(
    spec,
    s0: State,
    j: int,
    phi: float,
    panels: int = 4096,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-10,
    kernel: str | None = None,
) -> float:
    """One-period section identity residual for component j.

    Compares the Lyapunov-form difference across t in [0, 2*pi] against the
    quadrature of [p_j(t) - h_j(x(t))] sin(n_j t + phi) along the dense
    trajectory; the two agree exactly for resonant n_j.
    """
    n = spec.n[j]
    ts = np.linspace(0.0, TWO_PI, panels + 1)
    states = flow_states(spec, s0, ts, rel_tol, abs_tol, kernel)
    d = spec.d
    lhs = lyapunov_value(n, phi, states[-1, j], states[-1, d + j]) - lyapunov_value(
        n, phi, states[0, j], states[0, d + j]
    )
    integrand = (
        fc.evaluate(spec.p[j], ts) - coupling_values(spec, j, states[:, :d])
    ) * np.sin(n * ts + phi)
    rhs = fc.simpson_values(integrand, 0.0, TWO_PI)
    return abs(lhs - rhs)


@dataclass
class GrowthRow:
    """Section growth of one component's Lyapunov form against its margin."""

    j: int
    phi: float
    gamma: float
    ks: np.ndarray
    delta_v: np.ndarray
    slope: float
    violations: int

    def margins(self) -> np.ndarray:
        """Signed distance to the guaranteed line, positive = satisfied."""
        line = self.ks * self.gamma
        return np.where(self.ks >= 0, self.delta_v - line, line - self.delta_v)


@dataclass
class GrowthReport:
    rows: list[GrowthRow]
    k_min: int
    k_max: int

    @property
    def total_violations(self) -> int:
        return sum(r.violations for r in self.rows)


def _growth_targets(report: CertificateReport):
    """(j, phi, gamma) rows a growth check should verify."""
    out = []
    for c in report.certified_components():
        if c.window is not None:
            out.append((c.j, c.window.phases()[0], c.gamma))
        elif c.phi0 is not None:
            out.append((c.j, c.phi0, c.gamma))
    return out


def _growth_rows(spec, trace: SectionTrace, targets) -> list[GrowthRow]:
    rows = []
    ks = trace.ks
    nonzero = ks != 0
    d = spec.d
    for j, phi, gamma in targets:
        v = lyapunov_value(spec.n[j], phi, trace.states[:, j], trace.states[:, d + j])
        dv = v - v[ks == 0][0]
        line = ks * gamma
        tol = 1e-6 * (1.0 + np.abs(line))
        bad_fwd = (ks > 0) & (dv < line - tol)
        bad_bwd = (ks < 0) & (dv > line + tol)
        denom = float(np.sum(ks[nonzero] ** 2))
        slope = float(np.sum(ks[nonzero] * dv[nonzero]) / denom) if denom else 0.0
        rows.append(
            GrowthRow(j, phi, gamma, ks, dv, slope, int(bad_fwd.sum() + bad_bwd.sum()))
        )
    return rows


def growth_check(
    spec,
    s0: State,
    report: CertificateReport,
    k_max: int,
    direction: str = "forward",
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-10,
    kernel: str | None = None,
) -> GrowthReport:
    """Verify delta-V_k >= k*Gamma (and the mirrored backward inequality).

    Uses the certificate's optimal phase (global criterion) or the first
    window phase (cyclic/radial).  For the asymptotic criteria the start
    state must satisfy the region hypothesis for the inequality to be
    guaranteed; violations are counted either way.
    """
    if direction not in ("forward", "backward", "both"):
        raise ValueError("direction must be 'forward', 'backward' or 'both'")
    k_lo = -k_max if direction in ("backward", "both") else 0
    k_hi = k_max if direction in ("forward", "both") else 0
    trace = section_trace(spec, s0, k_lo, k_hi, rel_tol, abs_tol, kernel)
    rows = _growth_rows(spec, trace, _growth_targets(report))
    return GrowthReport(rows, k_lo, k_hi)


def matrix_growth_check(
    mspec: MatrixSpec,
    witness: MatrixWitness,
    s0: State,
    k_max: int,
    direction: str = "forward",
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-10,
    kernel: str | None = None,
) -> GrowthReport:
    """Vector variant: V(zeta, eta) = <eta, v(0)> - <zeta, v'(0)>."""
    if direction not in ("forward", "backward", "both"):
        raise ValueError("direction must be 'forward', 'backward' or 'both'")
    k_lo = -k_max if direction in ("backward", "both") else 0
    k_hi = k_max if direction in ("forward", "both") else 0
    trace = section_trace(mspec, s0, k_lo, k_hi, rel_tol, abs_tol, kernel)
    d = mspec.d
    q = np.array(witness.q)
    v0 = witness.c * math.sin(witness.phi) * q
    v0p = witness.c * witness.n * math.cos(witness.phi) * q
    vals = trace.states[:, d:] @ v0 - trace.states[:, :d] @ v0p
    ks = trace.ks
    dv = vals - vals[ks == 0][0]
    gamma = witness.gamma_prime
    line = ks * gamma
    tol = 1e-6 * (1.0 + np.abs(line))
    bad = ((ks > 0) & (dv < line - tol)) | ((ks < 0) & (dv > line + tol))
    nonzero = ks != 0
    denom = float(np.sum(ks[nonzero] ** 2))
    slope = float(np.sum(ks[nonzero] * dv[nonzero]) / denom) if denom else 0.0
    row = GrowthRow(-1, witness.phi, gamma, ks, dv, slope, int(bad.sum()))
    return GrowthReport([row], k_lo, k_hi)


@dataclass
class EnergyReport:
    """Energy positivity, |E'| <= E, and the per-period exponential floor."""

    j: int
    m_const: float
    section_energy: np.ndarray  # E_j(2*k*pi), k = 0..k_max
    period_min: np.ndarray  # min of E_j over [2*k*pi, 2*(k+1)*pi)
    deriv_max_ratio: float  # max |E'_j| / E_j on the dense grid
    gronwall_min_ratio: float  # min period_min / (e^{-2*pi} E_j(2*k*pi))

    @property
    def deriv_ok(self) -> bool:
        return self.deriv_max_ratio <= 1.0 + 1e-9

    @property
    def gronwall_ok(self) -> bool:
        return self.gronwall_min_ratio >= 1.0 - 1e-6


def _energy_report(j, m, ts, e, de, k_max, spp) -> EnergyReport:
    ratio = float(np.max(np.abs(de) / e))
    sections = e[::spp]
    mins = np.array([np.min(e[k * spp : (k + 1) * spp + 1]) for k in range(k_max)])
    floor = math.exp(-TWO_PI) * sections[:-1]
    gr = float(np.min(mins / floor)) if k_max else math.inf
    return EnergyReport(j, m, sections, mins, ratio, gr)


def energy_check(
    spec,
    s0: State,
    j: int,
    k_max: int,
    samples_per_period: int = 128,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
    kernel: str | None = None,
) -> EnergyReport:
    """Check |E'_j| <= E_j and the Gronwall floor over k_max forward periods.

    E_j = v_j^2/2 + n_j^2 x_j^2/2 + M_j^2/2 with M_j = sup|h_j| + sup|p_j|;
    E'_j is evaluated from the differential equation (not by differencing),
    so the first check is exact up to the coupling/forcing bounds, while the
    floor check exercises the integrated trajectory.
    """
    m = component_range(spec, j).abs_bound + fc.sup_bound(spec.p[j])
    m = max(m, 1e-30)  # keep ratios defined for the free oscillator
    spp = samples_per_period
    ts = np.arange(k_max * spp + 1) * (TWO_PI / spp)
    states = flow_states(spec, s0, ts, rel_tol, abs_tol, kernel)
    d = spec.d
    xj = states[:, j]
    vj = states[:, d + j]
    e = 0.5 * vj**2 + 0.5 * spec.n[j] ** 2 * xj**2 + 0.5 * m * m
    de = vj * (fc.evaluate(spec.p[j], ts) - coupling_values(spec, j, states[:, :d]))
    return _energy_report(j, m, ts, e, de, k_max, spp)


def matrix_energy_check(
    mspec: MatrixSpec,
    s0: State,
    k_max: int,
    samples_per_period: int = 128,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
    kernel: str | None = None,
) -> EnergyReport:
    """Vector energy E = |v|^2/2 + <Ax, x>/2 + M^2/2 for the matrix form."""
    d = mspec.d
    sup_p = math.sqrt(sum(fc.sup_bound(p) ** 2 for p in mspec.p))
    sup_h = math.sqrt(sum(component_range(mspec, j).abs_bound ** 2 for j in range(d)))
    m = max(sup_p + sup_h, 1e-30)
    spp = samples_per_period
    ts = np.arange(k_max * spp + 1) * (TWO_PI / spp)
    states = flow_states(mspec, s0, ts, rel_tol, abs_tol, kernel)
    x = states[:, :d]
    v = states[:, d:]
    a = mspec.matrix()
    e = 0.5 * np.sum(v * v, axis=1) + 0.5 * np.einsum("ki,ij,kj->k", x, a, x) + 0.5 * m * m
    pv = np.column_stack([fc.evaluate(p, ts) for p in mspec.p])
    hv = np.column_stack([coupling_values(mspec, j, x) for j in range(d)])
    de = np.sum(v * (pv - hv), axis=1)
    return _energy_report(-1, m, ts, e, de, k_max, spp)


@dataclass
class Classification:
    """Escape labels from section radii over a finite horizon.

    ``label`` is the whole-vector verdict ("both", "unbounded-future",
    "unbounded-past" or "undetermined"); per_component carries
    (future, past) flags per component.  Numerical evidence only.
    """

    label: str
    future: bool
    past: bool
    per_component: list[tuple[bool, bool]]
    escape_level: float
    horizon_k: int

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "future": self.future,
            "past": self.past,
            "per_component": [
                {"j": j + 1, "future": f, "past": p}
                for j, (f, p) in enumerate(self.per_component)
            ],
            "escape_level": self.escape_level,
            "horizon_k": self.horizon_k,
        }


def default_escape_level(s0: State) -> float:
    return 1e4 * (1.0 + float(s0.x @ s0.x + s0.v @ s0.v))


def classify_trajectory(
    spec,
    s0: State,
    horizon_k: int,
    escape_level: float | None = None,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
    kernel: str | None = None,
    trace: SectionTrace | None = None,
) -> Classification:
    """Label escape when section radii clear the level on the horizon's last quarter.

    A direction counts as escaping when x_j(2k pi)^2 + x'_j(2k pi)^2 stays
    above ``escape_level`` for every section in the last quarter of the
    horizon (component-wise for the per-component flags, min over components
    for the whole-vector label).
    """
    if horizon_k < 1:
        raise ValueError("horizon must cover at least one period")
    if escape_level is None:
        escape_level = default_escape_level(s0)
    if not escape_level > 0:
        raise ValueError("escape level must be positive")
    if trace is None:
        trace = section_trace(spec, s0, -horizon_k, horizon_k, rel_tol, abs_tol, kernel)
    d = spec.d
    ks = trace.ks
    k_tail = max(1, math.ceil(0.75 * horizon_k))
    fwd_win = ks >= k_tail
    bwd_win = ks <= -k_tail
    per = []
    for j in range(d):
        r2 = trace.states[:, j] ** 2 + trace.states[:, d + j] ** 2
        fj = bool(np.all(r2[fwd_win] > escape_level)) if fwd_win.any() else False
        pj = bool(np.all(r2[bwd_win] > escape_level)) if bwd_win.any() else False
        per.append((fj, pj))
    future = all(f for f, _ in per)
    past = all(p for _, p in per)
    if future and past:
        label = "both"
    elif future:
        label = "unbounded-future"
    elif past:
        label = "unbounded-past"
    else:
        label = "undetermined"
    return Classification(label, future, past, per, float(escape_level), horizon_k)
