# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled adaptive Runge-Kutta 5(4) core.

Twin of ``_rkcore_py`` (same tables, coefficients, controller and operation
order); see that module for the commented reference.  The stepping loop
releases the GIL so trajectory batches parallelize across threads.
"""

import numpy as np

from libc.math cimport atan, cos, fabs, isfinite, pow, sin, sqrt, tanh

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2

cdef int ST_OK = 0
cdef int ST_UNDERFLOW = 1
cdef int ST_NONFINITE = 2

cdef double H_MIN = 1e-14

cdef double C2 = 1.0 / 5.0
cdef double C3 = 3.0 / 10.0
cdef double C4 = 4.0 / 5.0
cdef double C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0
cdef double A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0
cdef double A42 = -56.0 / 15.0
cdef double A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0
cdef double A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0
cdef double A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0
cdef double A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0
cdef double B3 = 500.0 / 1113.0
cdef double B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0
cdef double B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0
cdef double E3 = -71.0 / 16695.0
cdef double E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0
cdef double E6 = 22.0 / 525.0
cdef double E7 = -1.0 / 40.0

cdef double SAFETY = 0.9
cdef double BETA = 0.04
cdef double EXPO1 = 0.2 - BETA * 0.75
cdef double FACC1 = 5.0
cdef double FACC2 = 0.1


cdef inline double _prog(
    const int* code, const double* pa, const double* pb,
    int i0, int i1, double u, double* stack,
) noexcept nogil:
    cdef int sp = 0
    cdef int i, op
    for i in range(i0, i1):
        op = code[i]
        if op == 0:
            stack[sp] = pa[i]
            sp += 1
        elif op == 1:
            stack[sp] = tanh(pa[i] * u + pb[i])
            sp += 1
        elif op == 2:
            stack[sp] = atan(pa[i] * u + pb[i])
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


cdef void _field(
    int kind, int d, const double* nsq, const double* amat,
    int kmax, const double* fa0, const double* fcos, const double* fsin,
    const int* code, const double* pa, const double* pb, const int* pstart,
    const int* tvar, const int* tstart,
    double* stack, double* cs, double* sn,
    double tsign, double s, const double* y, double* out,
) noexcept nogil:
    cdef double t = tsign * s
    cdef double ct = cos(t)
    cdef double st = sin(t)
    cdef double ck = 1.0
    cdef double sk = 0.0
    cdef double cn, sn_k, r, acc, pj, hj, ax
    cdef int i, j, jj, k, ti, base, base2
    for k in range(kmax):
        cn = ck * ct - sk * st
        sn_k = sk * ct + ck * st
        cs[k] = cn
        sn[k] = sn_k
        ck = cn
        sk = sn_k
    r = 0.0
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
            hj = _prog(code, pa, pb, pstart[j], pstart[j + 1], y[jj], stack)
        elif kind == 2:
            hj = _prog(code, pa, pb, pstart[j], pstart[j + 1], r, stack)
        else:
            hj = 0.0
            for ti in range(tstart[j], tstart[j + 1]):
                hj += _prog(code, pa, pb, pstart[ti], pstart[ti + 1], y[tvar[ti]], stack)
        if kind == 3:
            ax = 0.0
            base2 = j * d
            for i in range(d):
                ax += amat[base2 + i] * y[i]
        else:
            ax = nsq[j] * y[j]
        out[j] = tsign * y[d + j]
        out[d + j] = tsign * (pj - ax - hj)


def run(tab, double tsign, double s0, y0, rec_s, double rtol, double atol):
    """Same contract as ``_rkcore_py.run``."""
    cdef int kind = tab.kind
    cdef int d = tab.d
    cdef int n = 2 * d
    cdef int kmax = tab.kmax

    cdef double[::1] nsq_v = np.ascontiguousarray(tab.nsq, dtype=np.float64)
    cdef double[::1] amat_v = np.ascontiguousarray(tab.amat, dtype=np.float64)
    cdef double[::1] fa0_v = np.ascontiguousarray(tab.fa0, dtype=np.float64)
    cdef double[::1] fcos_v = np.ascontiguousarray(tab.fcos, dtype=np.float64)
    cdef double[::1] fsin_v = np.ascontiguousarray(tab.fsin, dtype=np.float64)
    cdef int[::1] code_v = np.ascontiguousarray(tab.code, dtype=np.int32)
    cdef double[::1] pa_v = np.ascontiguousarray(tab.pa, dtype=np.float64)
    cdef double[::1] pb_v = np.ascontiguousarray(tab.pb, dtype=np.float64)
    cdef int[::1] pstart_v = np.ascontiguousarray(tab.pstart, dtype=np.int32)
    cdef int[::1] tvar_v = np.ascontiguousarray(tab.tvar, dtype=np.int32)
    cdef int[::1] tstart_v = np.ascontiguousarray(tab.tstart, dtype=np.int32)

    y0a = np.ascontiguousarray(y0, dtype=np.float64)
    cdef double[::1] y0_v = y0a
    recs = np.ascontiguousarray(rec_s, dtype=np.float64)
    cdef double[::1] rec_s_v = recs
    cdef int m = rec_s_v.shape[0]

    rec_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] rec = rec_arr
    yend_arr = np.array(y0a, dtype=np.float64)
    cdef double[::1] yv = yend_arr

    work = np.zeros(9 * n, dtype=np.float64)
    cdef double[::1] wv = work
    stack_arr = np.zeros(max(tab.stack_size, 1), dtype=np.float64)
    cdef double[::1] stack_v = stack_arr
    trig = np.zeros(2 * max(kmax, 1), dtype=np.float64)
    cdef double[::1] trig_v = trig

    if m == 0:
        return STATUS_OK, yend_arr, rec_arr, (0, 0, 0, 0)

    cdef const double* nsq = NULL
    cdef const double* amat = NULL
    cdef const double* fa0 = &fa0_v[0]
    cdef const double* fcos = NULL
    cdef const double* fsin = NULL
    cdef const int* code = NULL
    cdef const double* pa = NULL
    cdef const double* pb = NULL
    cdef const int* pstart = &pstart_v[0]
    cdef const int* tvar = NULL
    cdef const int* tstart = NULL
    if nsq_v.shape[0] > 0:
        nsq = &nsq_v[0]
    if amat_v.shape[0] > 0:
        amat = &amat_v[0]
    if fcos_v.shape[0] > 0:
        fcos = &fcos_v[0]
    if fsin_v.shape[0] > 0:
        fsin = &fsin_v[0]
    if code_v.shape[0] > 0:
        code = &code_v[0]
    if pa_v.shape[0] > 0:
        pa = &pa_v[0]
    if pb_v.shape[0] > 0:
        pb = &pb_v[0]
    if tvar_v.shape[0] > 0:
        tvar = &tvar_v[0]
    if tstart_v.shape[0] > 0:
        tstart = &tstart_v[0]

    cdef double* stack = &stack_v[0]
    cdef double* cs = &trig_v[0]
    cdef double* sn = &trig_v[max(kmax, 1)]

    cdef double* y = &yv[0]
    cdef double* k1 = &wv[0]
    cdef double* k2 = &wv[n]
    cdef double* k3 = &wv[2 * n]
    cdef double* k4 = &wv[3 * n]
    cdef double* k5 = &wv[4 * n]
    cdef double* k6 = &wv[5 * n]
    cdef double* k7 = &wv[6 * n]
    cdef double* yt = &wv[7 * n]
    cdef double* ynew = &wv[8 * n]
    cdef double* tmp

    cdef double s = s0
    cdef double s_end = rec_s_v[m - 1]
    cdef double h, hmax, dnf, dny, sk_i, der2, der12, h1
    cdef double err, e, ya, yb, rres, fac11, fac, hnew, facold, target
    cdef int i, irec, status
    cdef long nstep = 0, naccept = 0, nreject = 0, nfev = 0
    cdef bint hit, reject = False, nonfinite = False

    status = ST_OK
    with nogil:
        _field(kind, d, nsq, amat, kmax, fa0, fcos, fsin, code, pa, pb,
               pstart, tvar, tstart, stack, cs, sn, tsign, s, y, k1)
        nfev += 1

        hmax = s_end - s
        dnf = 0.0
        dny = 0.0
        for i in range(n):
            sk_i = atol + rtol * fabs(y[i])
            dnf += (k1[i] / sk_i) * (k1[i] / sk_i)
            dny += (y[i] / sk_i) * (y[i] / sk_i)
        if dnf <= 1e-10 or dny <= 1e-10:
            h = 1e-6
        else:
            h = sqrt(dny / dnf) * 0.01
        if h > hmax:
            h = hmax
        for i in range(n):
            yt[i] = y[i] + h * k1[i]
        _field(kind, d, nsq, amat, kmax, fa0, fcos, fsin, code, pa, pb,
               pstart, tvar, tstart, stack, cs, sn, tsign, s + h, yt, k2)
        nfev += 1
        der2 = 0.0
        for i in range(n):
            sk_i = atol + rtol * fabs(y[i])
            der2 += ((k2[i] - k1[i]) / sk_i) * ((k2[i] - k1[i]) / sk_i)
        der2 = sqrt(der2) / h
        der12 = der2 if der2 > sqrt(dnf) else sqrt(dnf)
        if der12 <= 1e-15:
            h1 = h * 1e-3
            if h1 < 1e-6:
                h1 = 1e-6
        else:
            h1 = pow(0.01 / der12, 0.2)
        h = 100.0 * h
        if h1 < h:
            h = h1
        if hmax < h:
            h = hmax

        irec = 0
        facold = 1e-4
        while irec < m:
            target = rec_s_v[irec]
            hit = False
            if s + h >= target:
                h = target - s
                hit = True
                if h < H_MIN:
                    for i in range(n):
                        rec[irec, i] = y[i]
                    irec += 1
                    s = target
                    continue
            nstep += 1

            for i in range(n):
                yt[i] = y[i] + h * (A21 * k1[i])
            _field(kind, d, nsq, amat, kmax, fa0, fcos, fsin, code, pa, pb,
                   pstart, tvar, tstart, stack, cs, sn, tsign, s + C2 * h, yt, k2)
            for i in range(n):
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            _field(kind, d, nsq, amat, kmax, fa0, fcos, fsin, code, pa, pb,
                   pstart, tvar, tstart, stack, cs, sn, tsign, s + C3 * h, yt, k3)
            for i in range(n):
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            _field(kind, d, nsq, amat, kmax, fa0, fcos, fsin, code, pa, pb,
                   pstart, tvar, tstart, stack, cs, sn, tsign, s + C4 * h, yt, k4)
            for i in range(n):
                yt[i] = y[i] + h * (
                    A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]
                )
            _field(kind, d, nsq, amat, kmax, fa0, fcos, fsin, code, pa, pb,
                   pstart, tvar, tstart, stack, cs, sn, tsign, s + C5 * h, yt, k5)
            for i in range(n):
                yt[i] = y[i] + h * (
                    A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                    + A64 * k4[i] + A65 * k5[i]
                )
            _field(kind, d, nsq, amat, kmax, fa0, fcos, fsin, code, pa, pb,
                   pstart, tvar, tstart, stack, cs, sn, tsign, s + h, yt, k6)
            for i in range(n):
                ynew[i] = y[i] + h * (
                    B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]
                )
            _field(kind, d, nsq, amat, kmax, fa0, fcos, fsin, code, pa, pb,
                   pstart, tvar, tstart, stack, cs, sn, tsign, s + h, ynew, k7)
            nfev += 6

            err = 0.0
            for i in range(n):
                e = h * (
                    E1 * k1[i] + E3 * k3[i] + E4 * k4[i]
                    + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]
                )
                ya = fabs(y[i])
                yb = fabs(ynew[i])
                sk_i = atol + rtol * (ya if ya > yb else yb)
                rres = e / sk_i
                err += rres * rres
            err = sqrt(err / n)

            if not isfinite(err):
                nonfinite = True
                nreject += 1
                reject = True
                h *= 0.5
                if h < H_MIN:
                    status = ST_NONFINITE
                    break
                continue

            fac11 = pow(err, EXPO1)
            if err <= 1.0:
                fac = fac11 / pow(facold, BETA)
                fac = fac / SAFETY
                if fac > FACC1:
                    fac = FACC1
                if fac < FACC2:
                    fac = FACC2
                hnew = h / fac
                facold = err if err > 1e-4 else 1e-4
                naccept += 1
                if hit:
                    s = target
                    for i in range(n):
                        rec[irec, i] = ynew[i]
                    irec += 1
                else:
                    s = s + h
                tmp = y
                y = ynew
                ynew = tmp
                tmp = k1
                k1 = k7
                k7 = tmp
                if reject and hnew > h:
                    hnew = h
                reject = False
                nonfinite = False
                h = hnew
            else:
                nreject += 1
                reject = True
                fac = fac11 / SAFETY
                if fac > FACC1:
                    fac = FACC1
                h = h / fac
                if h < H_MIN:
                    status = ST_NONFINITE if nonfinite else ST_UNDERFLOW
                    break

    # y may point at the workspace after an odd number of swaps
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = y[i]
    return status, out, rec_arr, (nstep, naccept, nreject, nfev)
