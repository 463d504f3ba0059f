"""Scenario files: one JSON document describing a system plus run parameters.

Component indices are 1-based in JSON (matching the math) and 0-based in
memory.  Serialization is canonical: parsing and re-serializing a scenario
is a fixed point, which keeps fixtures diffable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .integrate import State
from .system import MatrixSpec, SystemSpec, system_from_dict, system_to_dict, validate_spec

MAX_GRID_POINTS = 1_000_000

__all__ = [
    "GridSpec",
    "ModeChoice",
    "Scenario",
    "parse_scenario",
    "scenario_to_dict",
    "load_scenario",
    "save_scenario",
]


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid over one component's phase plane, others fixed."""

    component: int  # 0-based
    x_min: float
    x_max: float
    nx: int
    v_min: float
    v_max: float
    nv: int
    fixed: tuple[tuple[float, float], ...]  # (x_i, v_i) of the other components

    @property
    def size(self) -> int:
        return self.nx * self.nv

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(self.x_min, self.x_max, self.nx),
            np.linspace(self.v_min, self.v_max, self.nv),
        )

    def state(self, ix: int, iv: int, d: int) -> State:
        xs, vs = self.axes()
        x = np.empty(d)
        v = np.empty(d)
        others = iter(self.fixed)
        for j in range(d):
            if j == self.component:
                x[j], v[j] = xs[ix], vs[iv]
            else:
                x[j], v[j] = next(others)
        return State(0.0, x, v)


@dataclass(frozen=True)
class ModeChoice:
    """Periodic-mode selection for matrix systems (eigen index 0-based)."""

    index: int | None = None
    phi: float | None = None
    c: float = 1.0


@dataclass
class Scenario:
    name: str
    system: SystemSpec | MatrixSpec
    criterion: str = "auto"
    initial_conditions: tuple[tuple[float, ...], ...] = ()
    grid: GridSpec | None = None
    k_max: int = 50
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    escape_level: float | None = None
    seed: int = 1
    mode: ModeChoice = field(default_factory=ModeChoice)
    out_dir: str | None = None

    def states(self) -> list[State]:
        d = self.system.d
        out = []
        for row in self.initial_conditions:
            y = np.asarray(row, dtype=float)
            out.append(State(0.0, y[:d], y[d:]))
        return out


def parse_scenario(doc: dict) -> Scenario:
    try:
        name = str(doc["name"])
        system = system_from_dict(doc["system"])
    except KeyError as exc:
        raise ValueError(f"scenario is missing required key {exc}") from None
    report = validate_spec(system)
    if not report.ok:
        raise ValueError("invalid system: " + "; ".join(report.problems))
    d = system.d

    ics = []
    for i, row in enumerate(doc.get("initial_conditions", [])):
        vals = tuple(float(v) for v in row)
        if len(vals) != 2 * d:
            raise ValueError(
                f"initial condition {i + 1} has {len(vals)} entries, expected {2 * d}"
            )
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"initial condition {i + 1} has non-finite entries")
        ics.append(vals)

    grid = None
    if "grid" in doc and doc["grid"] is not None:
        g = doc["grid"]
        comp = int(g["component"]) - 1
        if not 0 <= comp < d:
            raise ValueError(f"grid component {comp + 1} outside 1..{d}")
        fixed = tuple((float(a), float(b)) for a, b in g.get("fixed", []))
        if len(fixed) != d - 1:
            raise ValueError(
                f"grid needs {d - 1} fixed (x, v) pairs for the other components"
            )
        x_min, x_max, nx = g["x"]
        v_min, v_max, nv = g["v"]
        grid = GridSpec(
            comp,
            float(x_min),
            float(x_max),
            int(nx),
            float(v_min),
            float(v_max),
            int(nv),
            fixed,
        )
        if grid.nx < 1 or grid.nv < 1:
            raise ValueError("grid counts must be positive")
        if grid.size > MAX_GRID_POINTS:
            raise ValueError(
                f"grid has {grid.size} points, more than the {MAX_GRID_POINTS} cap"
            )

    criterion = str(doc.get("criterion", "auto"))
    if criterion not in ("auto", "global", "matrix", "cyclic", "radial"):
        raise ValueError(f"unknown criterion {criterion!r}")

    mode = ModeChoice()
    if "mode" in doc and doc["mode"] is not None:
        m = doc["mode"]
        idx = m.get("index")
        phi = m.get("phi")
        mode = ModeChoice(
            None if idx is None else int(idx) - 1,
            None if phi is None else float(phi),
            float(m.get("c", 1.0)),
        )

    esc = doc.get("escape_level")
    return Scenario(
        name=name,
        system=system,
        criterion=criterion,
        initial_conditions=tuple(ics),
        grid=grid,
        k_max=int(doc.get("k_max", 50)),
        rel_tol=float(doc.get("rel_tol", 1e-9)),
        abs_tol=float(doc.get("abs_tol", 1e-9)),
        escape_level=None if esc is None else float(esc),
        seed=int(doc.get("seed", 1)),
        mode=mode,
        out_dir=doc.get("out_dir"),
    )


def scenario_to_dict(sc: Scenario) -> dict:
    doc = {
        "name": sc.name,
        "system": system_to_dict(sc.system),
        "criterion": sc.criterion,
        "initial_conditions": [list(row) for row in sc.initial_conditions],
        "grid": None,
        "k_max": sc.k_max,
        "rel_tol": sc.rel_tol,
        "abs_tol": sc.abs_tol,
        "escape_level": sc.escape_level,
        "seed": sc.seed,
        "mode": {
            "index": None if sc.mode.index is None else sc.mode.index + 1,
            "phi": sc.mode.phi,
            "c": sc.mode.c,
        },
        "out_dir": sc.out_dir,
    }
    if sc.grid is not None:
        g = sc.grid
        doc["grid"] = {
            "component": g.component + 1,
            "x": [g.x_min, g.x_max, g.nx],
            "v": [g.v_min, g.v_max, g.nv],
            "fixed": [list(p) for p in g.fixed],
        }
    return doc


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return parse_scenario(doc)


def save_scenario(sc: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(scenario_to_dict(sc), f, indent=2)
        f.write("\n")
