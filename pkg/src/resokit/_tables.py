"""Flat array form of a system, shared by the compiled and Python kernels.

Expressions become postfix opcode programs; forcings become padded
coefficient matrices.  Kind codes: 0 separable general, 1 cyclic, 2 radial,
3 matrix.
"""

from __future__ import annotations

import numpy as np

from . import expr as ex
from .system import CyclicCoupling, GeneralCoupling, MatrixSpec, RadialCoupling

KIND_GENERAL = 0
KIND_CYCLIC = 1
KIND_RADIAL = 2
KIND_MATRIX = 3


class SystemTables:
    __slots__ = (
        "kind",
        "d",
        "nsq",
        "amat",
        "kmax",
        "fa0",
        "fcos",
        "fsin",
        "code",
        "pa",
        "pb",
        "pstart",
        "tvar",
        "tstart",
        "stack_size",
    )


def _pack_programs(tab: SystemTables, exprs) -> None:
    code: list[np.ndarray] = []
    pa: list[np.ndarray] = []
    pb: list[np.ndarray] = []
    starts = [0]
    depth = 1
    for e in exprs:
        prog = ex.compile_program(e)
        code.append(prog.code)
        pa.append(prog.pa)
        pb.append(prog.pb)
        starts.append(starts[-1] + len(prog.code))
        depth = max(depth, prog.stack_size)
    tab.code = (
        np.concatenate(code).astype(np.int32) if code else np.zeros(0, np.int32)
    )
    tab.pa = np.concatenate(pa) if pa else np.zeros(0)
    tab.pb = np.concatenate(pb) if pb else np.zeros(0)
    tab.pstart = np.asarray(starts, dtype=np.int32)
    tab.stack_size = depth


def build_tables(spec) -> SystemTables:
    tab = SystemTables()
    d = spec.d
    tab.d = d
    ps = spec.p
    kmax = max((p.max_harmonic for p in ps), default=0)
    tab.kmax = kmax
    tab.fa0 = np.array([p.a0 for p in ps], dtype=float)
    fcos = np.zeros((d, kmax))
    fsin = np.zeros((d, kmax))
    for j, p in enumerate(ps):
        k = p.max_harmonic
        if k:
            fcos[j, :k] = p.cos
            fsin[j, :k] = p.sin
    tab.fcos = np.ascontiguousarray(fcos.ravel())
    tab.fsin = np.ascontiguousarray(fsin.ravel())

    if isinstance(spec, MatrixSpec):
        tab.kind = KIND_MATRIX
        tab.nsq = np.zeros(d)
        tab.amat = np.ascontiguousarray(spec.matrix().ravel())
        rows = spec.h
    else:
        tab.nsq = np.array([n * n for n in spec.n], dtype=float)
        tab.amat = np.zeros(0)
        c = spec.coupling
        if isinstance(c, CyclicCoupling):
            tab.kind = KIND_CYCLIC
        elif isinstance(c, RadialCoupling):
            tab.kind = KIND_RADIAL
        else:
            tab.kind = KIND_GENERAL
        rows = c.terms if isinstance(c, GeneralCoupling) else None
        if rows is None:
            _pack_programs(tab, c.terms)
            tab.tvar = np.zeros(0, np.int32)
            tab.tstart = np.zeros(d + 1, np.int32)
            return tab

    # separable rows: one program per additive term, grouped per component
    tvar: list[int] = []
    tstart = [0]
    flat = []
    for ts in rows:
        for t in ts:
            tvar.append(t.var)
            flat.append(t.expr)
        tstart.append(len(tvar))
    _pack_programs(tab, flat)
    tab.tvar = np.asarray(tvar, dtype=np.int32)
    tab.tstart = np.asarray(tstart, dtype=np.int32)
    return tab
