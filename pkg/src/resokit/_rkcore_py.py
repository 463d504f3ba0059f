"""Pure-Python adaptive Runge-Kutta 5(4) core.

Reference twin of the compiled extension ``_rkcore``: same tables, same
stage coefficients, same step controller, the operations performed in the
same order, so the two kernels agree to floating-point rounding.  Selected
automatically when the extension is not built (or RESOKIT_PURE_PY=1).

The stepper integrates an internal clock s forward; physical time is
t = tsign * s and the right-hand side is multiplied by tsign, which is how
backward-time runs reuse the same loop.  It lands exactly on every requested
record time.
"""

from __future__ import annotations

import math

import numpy as np

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2

H_MIN = 1e-14

# Dormand-Prince 5(4) pair, FSAL
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

_SAFETY = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - _BETA * 0.75
_FACC1 = 5.0  # max shrink per accepted step: h/5
_FACC2 = 0.1  # max growth per accepted step: 10*h


def run(tab, tsign, s0, y0, rec_s, rtol, atol):
    """Integrate from s0, landing exactly on each s in rec_s (increasing).

    Returns (status, y_end, rec, stats) where rec has one row per record
    time and stats = (steps, accepted, rejected, field_evals).
    """
    kind = tab.kind
    d = tab.d
    n = 2 * d
    nsq = tab.nsq.tolist()
    amat = tab.amat.tolist()
    kmax = tab.kmax
    fa0 = tab.fa0.tolist()
    fcos = tab.fcos.tolist()
    fsin = tab.fsin.tolist()
    code = tab.code.tolist()
    pa = tab.pa.tolist()
    pb = tab.pb.tolist()
    pstart = tab.pstart.tolist()
    tvar = tab.tvar.tolist()
    tstart = tab.tstart.tolist()
    stack = [0.0] * max(tab.stack_size, 1)
    cs = [0.0] * max(kmax, 1)
    sn = [0.0] * max(kmax, 1)

    tanh, atn, sin, cos, sqrt = math.tanh, math.atan, math.sin, math.cos, math.sqrt
    isfinite = math.isfinite

    def prog(p, u):
        sp = 0
        for i in range(pstart[p], pstart[p + 1]):
            op = code[i]
            if op == 0:
                stack[sp] = pa[i]
                sp += 1
            elif op == 1:
                stack[sp] = tanh(pa[i] * u + pb[i])
                sp += 1
            elif op == 2:
                stack[sp] = atn(pa[i] * u + pb[i])
                sp += 1
            elif op == 3:
                stack[sp] = sin(pa[i] * u + pb[i])
                sp += 1
            elif op == 4:
                stack[sp] = cos(pa[i] * u + pb[i])
                sp += 1
            elif op == 5:
                stack[sp - 1] = pa[i] * stack[sp - 1]
            else:
                stack[sp - 2] = stack[sp - 2] + stack[sp - 1]
                sp -= 1
        return stack[0]

    def field(s, y, out):
        t = tsign * s
        ct = cos(t)
        st = sin(t)
        ck = 1.0
        sk = 0.0
        for k in range(kmax):
            cn = ck * ct - sk * st
            sn_k = sk * ct + ck * st
            cs[k] = cn
            sn[k] = sn_k
            ck = cn
            sk = sn_k
        if kind == 2:
            acc = 0.0
            for i in range(d):
                acc += y[i] * y[i]
            r = sqrt(acc)
        for j in range(d):
            pj = fa0[j]
            base = j * kmax
            for k in range(kmax):
                pj += fcos[base + k] * cs[k] + fsin[base + k] * sn[k]
            if kind == 1:
                jj = j + 1
                if jj == d:
                    jj = 0
                hj = prog(j, y[jj])
            elif kind == 2:
                hj = prog(j, r)
            else:
                hj = 0.0
                for ti in range(tstart[j], tstart[j + 1]):
                    hj += prog(ti, y[tvar[ti]])
            if kind == 3:
                ax = 0.0
                base2 = j * d
                for i in range(d):
                    ax += amat[base2 + i] * y[i]
            else:
                ax = nsq[j] * y[j]
            out[j] = tsign * y[d + j]
            out[d + j] = tsign * (pj - ax - hj)

    m = len(rec_s)
    rec = np.empty((m, n))
    y = [float(u) for u in y0]
    stats = [0, 0, 0, 0]  # steps, accepted, rejected, field evals
    if m == 0:
        return STATUS_OK, np.array(y), rec, tuple(stats)
    s = float(s0)
    s_end = float(rec_s[m - 1])

    k1 = [0.0] * n
    k2 = [0.0] * n
    k3 = [0.0] * n
    k4 = [0.0] * n
    k5 = [0.0] * n
    k6 = [0.0] * n
    k7 = [0.0] * n
    yt = [0.0] * n
    ynew = [0.0] * n

    field(s, y, k1)
    stats[3] += 1

    # initial step size: compare the scaled sizes of y, f and a one-step
    # finite-difference estimate of f' (standard embedded-RK heuristic)
    hmax = s_end - s
    dnf = 0.0
    dny = 0.0
    for i in range(n):
        sk_i = atol + rtol * abs(y[i])
        dnf += (k1[i] / sk_i) ** 2
        dny += (y[i] / sk_i) ** 2
    if dnf <= 1e-10 or dny <= 1e-10:
        h = 1e-6
    else:
        h = sqrt(dny / dnf) * 0.01
    h = min(h, hmax)
    for i in range(n):
        yt[i] = y[i] + h * k1[i]
    field(s + h, yt, k2)
    stats[3] += 1
    der2 = 0.0
    for i in range(n):
        sk_i = atol + rtol * abs(y[i])
        der2 += ((k2[i] - k1[i]) / sk_i) ** 2
    der2 = sqrt(der2) / h
    der12 = max(der2, sqrt(dnf))
    if der12 <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / der12) ** 0.2
    h = min(100.0 * h, h1, hmax)

    irec = 0
    facold = 1e-4
    reject = False
    nonfinite = False
    while irec < m:
        target = float(rec_s[irec])
        hit = False
        if s + h >= target:
            h = target - s
            hit = True
            if h < H_MIN:
                # the remaining gap is below resolution; snap to the target
                rec[irec] = y
                irec += 1
                s = target
                continue
        stats[0] += 1

        for i in range(n):
            yt[i] = y[i] + h * (_A21 * k1[i])
        field(s + _C2 * h, yt, k2)
        for i in range(n):
            yt[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        field(s + _C3 * h, yt, k3)
        for i in range(n):
            yt[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        field(s + _C4 * h, yt, k4)
        for i in range(n):
            yt[i] = y[i] + h * (
                _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
            )
        field(s + _C5 * h, yt, k5)
        for i in range(n):
            yt[i] = y[i] + h * (
                _A61 * k1[i]
                + _A62 * k2[i]
                + _A63 * k3[i]
                + _A64 * k4[i]
                + _A65 * k5[i]
            )
        field(s + h, yt, k6)
        for i in range(n):
            ynew[i] = y[i] + h * (
                _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
            )
        field(s + h, ynew, k7)
        stats[3] += 6

        err = 0.0
        for i in range(n):
            e = h * (
                _E1 * k1[i]
                + _E3 * k3[i]
                + _E4 * k4[i]
                + _E5 * k5[i]
                + _E6 * k6[i]
                + _E7 * k7[i]
            )
            ya = abs(y[i])
            yb = abs(ynew[i])
            sk_i = atol + rtol * (ya if ya > yb else yb)
            r = e / sk_i
            err += r * r
        err = sqrt(err / n)

        if not isfinite(err):
            nonfinite = True
            stats[2] += 1
            reject = True
            h *= 0.5
            if h < H_MIN:
                return STATUS_NONFINITE, np.array(y), rec, tuple(stats)
            continue

        fac11 = err**_EXPO1
        if err <= 1.0:
            fac = fac11 / facold**_BETA
            fac = max(_FACC2, min(_FACC1, fac / _SAFETY))
            hnew = h / fac
            facold = max(err, 1e-4)
            stats[1] += 1
            if hit:
                s = target
                rec[irec] = ynew
                irec += 1
            else:
                s = s + h
            y, ynew = ynew, y
            k1, k7 = k7, k1
            if reject:
                hnew = min(hnew, h)
            reject = False
            nonfinite = False
            h = hnew
        else:
            stats[2] += 1
            reject = True
            h = h / min(_FACC1, fac11 / _SAFETY)
            if h < H_MIN:
                status = STATUS_NONFINITE if nonfinite else STATUS_UNDERFLOW
                return status, np.array(y), rec, tuple(stats)

    return STATUS_OK, np.array(y), rec, tuple(stats)
