"""Scenario-driven command line: certify, simulate, trace, basin, regions.

Each command loads one scenario JSON, runs, and writes CSV/JSON/SVG files
into the output directory.  Numeric CSV fields use %.17g so outputs are
byte-reproducible; batch work (trajectories, grid points) is mapped over a
thread pool with results collected in input order, so the worker count
never changes the bytes written.

Exit codes: 0 success (certificate holds, for ``certify``), 2 certificate
does not hold, 1 usage or runtime error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import certify, diagnose
from .integrate import (
    NonFiniteStateError,
    StepUnderflowError,
    State,
    flow_states,
    active_kernel,
)
from .scenario import Scenario, load_scenario
from .svgout import Svg
from .system import MatrixSpec

TWO_PI = 2.0 * math.pi

_LABEL_COLORS = {
    "both": "#984ea3",
    "unbounded-future": "#e41a1c",
    "unbounded-past": "#377eb8",
    "undetermined": "#eeeeee",
}
_TRAJ_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def _g17(x) -> str:
    return f"{float(x):.17g}"


def _pmap(fn, items, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def _certificate(sc: Scenario):
    """Certificate report plus escape regions and thresholds when available."""
    if isinstance(sc.system, MatrixSpec):
        crit = "matrix" if sc.criterion == "auto" else sc.criterion
        report = certify.check(
            sc.system, crit, mode=sc.mode.index, phi=sc.mode.phi, c=sc.mode.c
        )
        return report, None, None
    report = certify.check(sc.system, sc.criterion)
    if not report.certified or report.criterion not in ("cyclic", "radial"):
        return report, None, None
    thresholds = {
        row.j: certify.threshold_amplitude(sc.system, row.j, row.gamma)
        for row in report.certified_components()
    }
    regions = certify.build_regions(sc.system, report, thresholds)
    return report, regions, thresholds


def cmd_certify(sc: Scenario, out_dir: str, threads: int = 1) -> int:
    report, regions, _ = _certificate(sc)
    doc = report.to_dict()
    doc["name"] = sc.name
    if regions is not None:
        doc["regions"] = regions.to_dict()
    _write_json(os.path.join(out_dir, f"{sc.name}.certificate.json"), doc)
    return 0 if report.certified else 2


def cmd_simulate(sc: Scenario, out_dir: str, threads: int = 1, spp: int = 256) -> int:
    states = sc.states()
    if not states:
        print("no initial conditions in scenario", file=sys.stderr)
        return 1
    d = sc.system.d
    ts = np.arange(sc.k_max * spp + 1) * (TWO_PI / spp)

    def worker(s0):
        try:
            return flow_states(sc.system, s0, ts, sc.rel_tol, sc.abs_tol), None
        except (StepUnderflowError, NonFiniteStateError) as exc:
            return None, str(exc)

    results = _pmap(worker, states, threads)
    header = ["t"] + [f"x_{j + 1}" for j in range(d)] + [f"v_{j + 1}" for j in range(d)]
    ok_runs = []
    failures = 0
    for i, (traj, err) in enumerate(results, start=1):
        if traj is None:
            print(f"trajectory {i}: {err}", file=sys.stderr)
            failures += 1
            continue
        rows = (
            [_g17(t)] + [_g17(v) for v in row] for t, row in zip(ts, traj)
        )
        _write_csv(os.path.join(out_dir, f"{sc.name}.traj.{i}.csv"), header, rows)
        ok_runs.append(traj)

    for j in range(d):
        if not ok_runs:
            break
        xs = np.concatenate([tr[:, j] for tr in ok_runs])
        vs = np.concatenate([tr[:, d + j] for tr in ok_runs])
        pad_x = 0.05 * max(np.ptp(xs), 1e-6)
        pad_v = 0.05 * max(np.ptp(vs), 1e-6)
        svg = Svg(
            640,
            640,
            (xs.min() - pad_x, vs.min() - pad_v, xs.max() + pad_x, vs.max() + pad_v),
        )
        for i, tr in enumerate(ok_runs):
            svg.polyline(
                list(zip(tr[:, j], tr[:, d + j])),
                stroke=_TRAJ_COLORS[i % len(_TRAJ_COLORS)],
            )
        for tr in ok_runs:
            for k in range(0, sc.k_max + 1):
                svg.circle(tr[k * spp, j], tr[k * spp, d + j], 2.5)
        svg.text(
            *_corner_text_pos(svg), f"component {j + 1}: x vs x'", size=14
        )
        svg.write(os.path.join(out_dir, f"{sc.name}.phase.{j + 1}.svg"))
    return 1 if failures == len(states) else 0


def _corner_text_pos(svg: Svg):
    x = svg._x0 + 0.02 * (svg._x1 - svg._x0)
    y = svg._y1 - 0.05 * (svg._y1 - svg._y0)
    return x, y


def cmd_trace(sc: Scenario, out_dir: str, threads: int = 1) -> int:
    states = sc.states()
    if not states:
        print("no initial conditions in scenario", file=sys.stderr)
        return 1
    report, _, _ = _certificate(sc)
    d = sc.system.d
    matrix = isinstance(sc.system, MatrixSpec)

    def worker(s0):
        if matrix:
            growth = diagnose.matrix_growth_check(
                sc.system, report.matrix, s0, sc.k_max,
                rel_tol=sc.rel_tol, abs_tol=sc.abs_tol,
            )
            energies = {0: diagnose.matrix_energy_check(
                sc.system, s0, sc.k_max, rel_tol=sc.rel_tol, abs_tol=sc.abs_tol
            )}
            return growth, energies
        growth = diagnose.growth_check(
            sc.system, s0, report, sc.k_max,
            rel_tol=sc.rel_tol, abs_tol=sc.abs_tol,
        )
        if not growth.rows:
            # no certificate: still trace the resonant components at their
            # optimal phase against a zero-growth line
            fallback = certify.CertificateReport(
                report.criterion,
                True,
                tuple(
                    certify.ComponentCheck(
                        c.j, True, c.n_int, c.gain, c.span, c.slack, True, 0.0, c.phi0
                    )
                    for c in report.components
                    if c.resonant and c.phi0 is not None
                ),
            )
            growth = diagnose.growth_check(
                sc.system, s0, fallback, sc.k_max,
                rel_tol=sc.rel_tol, abs_tol=sc.abs_tol,
            )
        energies = {
            j: diagnose.energy_check(
                sc.system, s0, j, sc.k_max, rel_tol=sc.rel_tol, abs_tol=sc.abs_tol
            )
            for j in range(d)
        }
        return growth, energies

    results = _pmap(worker, states, threads)
    header = [
        "ic", "j", "k", "delta_v", "k_gamma", "margin",
        "e_section", "e_period_min", "gronwall_floor",
    ]
    rows = []
    floor = math.exp(-TWO_PI)
    for i, (growth, energies) in enumerate(results, start=1):
        by_j = {row.j: row for row in growth.rows}
        for j, erep in sorted(energies.items()):
            grow = by_j.get(-1 if matrix else j)
            for k in range(1, sc.k_max + 1):
                if grow is not None:
                    idx = int(np.nonzero(grow.ks == k)[0][0])
                    dv = grow.delta_v[idx]
                    kg = k * grow.gamma
                    gcols = [_g17(dv), _g17(kg), _g17(dv - kg)]
                else:
                    gcols = ["", "", ""]
                rows.append(
                    [str(i), str(0 if matrix else j + 1), str(k)]
                    + gcols
                    + [
                        _g17(erep.section_energy[k]),
                        _g17(erep.period_min[k - 1]),
                        _g17(floor * erep.section_energy[k - 1]),
                    ]
                )
    _write_csv(os.path.join(out_dir, f"{sc.name}.trace.csv"), header, rows)

    summary = {
        "name": sc.name,
        "certified": report.certified,
        "no_certificate": not report.certified,
        "criterion": report.criterion,
        "kernel": active_kernel(),
        "trajectories": [
            {
                "ic": i + 1,
                "growth": [
                    {
                        "j": 0 if matrix else row.j + 1,
                        "phi": row.phi,
                        "gamma": row.gamma,
                        "slope": row.slope,
                        "violations": row.violations,
                    }
                    for row in growth.rows
                ],
                "energy": [
                    {
                        "j": 0 if matrix else j + 1,
                        "m": erep.m_const,
                        "deriv_max_ratio": erep.deriv_max_ratio,
                        "deriv_ok": erep.deriv_ok,
                        "gronwall_min_ratio": erep.gronwall_min_ratio,
                        "gronwall_ok": erep.gronwall_ok,
                    }
                    for j, erep in sorted(energies.items())
                ],
            }
            for i, (growth, energies) in enumerate(results)
        ],
    }
    _write_json(os.path.join(out_dir, f"{sc.name}.trace.json"), summary)
    return 0


def cmd_basin(sc: Scenario, out_dir: str, threads: int = 1) -> int:
    if sc.grid is None:
        print("scenario has no grid", file=sys.stderr)
        return 1
    report, regions, _ = _certificate(sc)
    d = sc.system.d
    grid = sc.grid
    gc = grid.component
    full_cover = regions is not None and set(regions.components) == set(range(d))
    comp_region = regions.components.get(gc) if regions is not None else None

    points = [(ix, iv) for ix in range(grid.nx) for iv in range(grid.nv)]

    def worker(pt):
        ix, iv = pt
        s0 = grid.state(ix, iv, d)
        cl = diagnose.classify_trajectory(
            sc.system, s0, sc.k_max, sc.escape_level,
            rel_tol=sc.rel_tol, abs_tol=sc.abs_tol,
        )
        in_c = in_cp = in_cm = False
        if full_cover:
            in_c = certify.product_membership(regions, s0, "C")
            in_cp = certify.product_membership(regions, s0, "C+")
            in_cm = certify.product_membership(regions, s0, "C-")
        in_box = (
            bool(comp_region.in_parallelogram(float(s0.x[gc]), float(s0.v[gc])))
            if comp_region is not None
            else False
        )
        return cl.label, in_c, in_cp, in_cm, in_box

    results = _pmap(worker, points, threads)

    xs, vs = grid.axes()
    header = ["ix", "iv", "x", "v", "label", "in_c", "in_c_plus", "in_c_minus",
              "in_parallelogram"]
    rows = []
    for (ix, iv), (label, c, cp, cm, box) in zip(points, results):
        rows.append(
            [
                str(ix), str(iv), _g17(xs[ix]), _g17(vs[iv]), label,
                str(int(c)), str(int(cp)), str(int(cm)), str(int(box)),
            ]
        )
    _write_csv(os.path.join(out_dir, f"{sc.name}.basin.csv"), header, rows)

    dx = xs[1] - xs[0] if grid.nx > 1 else max(abs(xs[0]), 1.0) * 0.1
    dv = vs[1] - vs[0] if grid.nv > 1 else max(abs(vs[0]), 1.0) * 0.1
    world = (
        xs[0] - dx, vs[0] - dv, xs[-1] + dx, vs[-1] + dv
    )
    svg = Svg(720, 720, world)
    for (ix, iv), (label, *_rest) in zip(points, results):
        svg.rect_world(
            xs[ix] - 0.5 * dx, vs[iv] - 0.5 * dv, dx, dv, _LABEL_COLORS[label]
        )
    if comp_region is not None:
        _draw_region_lines(svg, comp_region, world)
    svg.write(os.path.join(out_dir, f"{sc.name}.basin.svg"))
    return 0


def _draw_region_lines(svg: Svg, region, world) -> None:
    span = 4.0 * max(world[2] - world[0], world[3] - world[1])
    for phi in (region.phi1, region.phi2):
        nrm = np.array([-region.n * math.cos(phi), math.sin(phi)])
        direction = np.array([math.sin(phi), region.n * math.cos(phi)])
        for level in (region.level, -region.level):
            p0 = nrm * (level / float(nrm @ nrm))
            a = p0 - span * direction
            b = p0 + span * direction
            svg.line(a[0], a[1], b[0], b[1], stroke="#000000", width=1.2,
                     dash="6,3")
    svg.polygon(region.vertices, stroke="#000000", width=1.5)


def cmd_regions(sc: Scenario, out_dir: str, threads: int = 1) -> int:
    report, regions, _ = _certificate(sc)
    if regions is None:
        print("scenario is not certified with escape regions", file=sys.stderr)
        return 2
    header = ["j", "n", "phi1", "phi2", "vbar"]
    rows = [
        [str(r.j + 1), _g17(r.n), _g17(r.phi1), _g17(r.phi2), _g17(r.level)]
        for r in regions.components.values()
    ]
    _write_csv(os.path.join(out_dir, f"{sc.name}.regions.csv"), header, rows)
    return 0


_COMMANDS = {
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "trace": cmd_trace,
    "basin": cmd_basin,
    "regions": cmd_regions,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="resokit",
        description="Certify and simulate unbounded resonant oscillations",
    )
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "certify": "check the unboundedness certificate, write a JSON report",
        "simulate": "integrate trajectories, write CSV and phase portraits",
        "trace": "write per-period growth and energy diagnostics",
        "basin": "classify a grid of initial conditions, write CSV and heatmap",
        "regions": "export escape-region line coefficients as CSV",
    }
    for name, fn in _COMMANDS.items():
        q = sub.add_parser(name, help=helps[name])
        q.add_argument("scenario", help="path to the scenario JSON file")
        q.add_argument("--out", default=None, help="output directory")
        q.add_argument("--tol", type=float, default=None,
                       help="override both integrator tolerances")
        q.add_argument("--kmax", type=int, default=None,
                       help="override the period horizon")
        q.add_argument("--seed", type=int, default=None, help="override the seed")
        q.add_argument("--threads", type=int, default=1,
                       help="worker threads for trajectory batches")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
    except json.JSONDecodeError as exc:
        print(
            f"parse error in {args.scenario} at line {exc.lineno} "
            f"column {exc.colno}: {exc.msg}",
            file=sys.stderr,
        )
        return 1
    except (OSError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if args.tol is not None:
        sc.rel_tol = args.tol
        sc.abs_tol = args.tol
    if args.kmax is not None:
        sc.k_max = args.kmax
    if args.seed is not None:
        sc.seed = args.seed
    out_dir = args.out or sc.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    try:
        return _COMMANDS[args.command](sc, out_dir, threads=max(1, args.threads))
    except (ValueError, TypeError, RuntimeError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
