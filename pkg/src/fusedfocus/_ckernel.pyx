# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince 5(4) kernels for the built-in Welander fields.

Operation order follows ``_pykernel`` exactly; keep the two in step.
"""
import numpy as np

from libc.math cimport atan, sin, cos, sqrt, pow, fabs, M_PI
from libc.stdlib cimport malloc, realloc, free

# fractions of an accepted step where the event coordinate is sampled
cdef double PROBES[4]
PROBES[:] = [0.25, 0.5, 0.75, 1.0]


cdef inline double _hermite(double u0, double u1, double d0, double d1, double th) nogil:
    cdef double th2 = th * th
    cdef double th3 = th2 * th
    return ((2.0 * th3 - 3.0 * th2 + 1.0) * u0 + (th3 - 2.0 * th2 + th) * d0
            + (3.0 * th2 - 2.0 * th3) * u1 + (th3 - th2) * d1)


cdef double C2 = 1.0 / 5.0
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
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 5.0
cdef double UROUND = 2.220446049250313e-16

FIXED_K = 0
ARCTAN_XY = 1
BLOWUP = 2
FAST = 3


cdef inline bint _rhs(int field, double* p, double x, double y,
                      double* dx, double* dy) nogil:
    cdef double alpha = p[0], beta = p[1], eps = p[2], a = p[3]
    cdef double k, s, c, core, g, delta
    if field == 0 or field == 1:
        if field == 0:
            k = p[4]
        else:
            k = atan(y / a) / M_PI + 0.5
        dx[0] = 1.0 - x - k * x
        dy[0] = (beta - beta * eps - k * eps - alpha - (beta + k) * y
                 - (alpha * beta - alpha) * x)
        return True
    k = y
    delta = p[5]
    if k <= delta or k >= 1.0 - delta:
        dx[0] = 0.0
        dy[0] = 0.0
        return False
    s = sin(M_PI * k)
    c = cos(M_PI * k)
    core = beta - beta * eps - k * eps - alpha - (alpha * beta - alpha) * x
    g = s * s * core + a * (beta + k) * s * c
    if field == 2:
        dx[0] = 1.0 - x - k * x
        dy[0] = g / (a * M_PI)
    else:
        dx[0] = a * (1.0 - x - k * x)
        dy[0] = g / M_PI
    return True


cdef inline double _sq(double v) nogil:
    return pow(v, 2.0)


def rhs(int field, p, double x, double y):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double dx = 0.0, dy = 0.0
    cdef bint ok = _rhs(field, &pv[0], x, y, &dx, &dy)
    return dx, dy, ok


def rk_step(int field, p, double y0, double y1, double h):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double* pp = &pv[0]
    cdef double k10, k11, k20, k21, k30, k31, k40, k41, k50, k51, k60, k61
    if not _rhs(field, pp, y0, y1, &k10, &k11):
        return y0, y1, False
    if not _rhs(field, pp, y0 + h * A21 * k10, y1 + h * A21 * k11, &k20, &k21):
        return y0, y1, False
    if not _rhs(field, pp, y0 + h * (A31 * k10 + A32 * k20),
                y1 + h * (A31 * k11 + A32 * k21), &k30, &k31):
        return y0, y1, False
    if not _rhs(field, pp, y0 + h * (A41 * k10 + A42 * k20 + A43 * k30),
                y1 + h * (A41 * k11 + A42 * k21 + A43 * k31), &k40, &k41):
        return y0, y1, False
    if not _rhs(field, pp, y0 + h * (A51 * k10 + A52 * k20 + A53 * k30 + A54 * k40),
                y1 + h * (A51 * k11 + A52 * k21 + A53 * k31 + A54 * k41), &k50, &k51):
        return y0, y1, False
    if not _rhs(field, pp,
                y0 + h * (A61 * k10 + A62 * k20 + A63 * k30 + A64 * k40 + A65 * k50),
                y1 + h * (A61 * k11 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51),
                &k60, &k61):
        return y0, y1, False
    return (y0 + h * (B1 * k10 + B3 * k30 + B4 * k40 + B5 * k50 + B6 * k60),
            y1 + h * (B1 * k11 + B3 * k31 + B4 * k41 + B5 * k51 + B6 * k61),
            True)


cdef double _initial_step(int field, double* p, double y0, double y1,
                          double f0, double f1, double rtol, double atol,
                          double direction, double max_step) nogil:
    cdef double sc0 = atol + rtol * fabs(y0)
    cdef double sc1 = atol + rtol * fabs(y1)
    cdef double d0 = sqrt(0.5 * (_sq(y0 / sc0) + _sq(y1 / sc1)))
    cdef double d1 = sqrt(0.5 * (_sq(f0 / sc0) + _sq(f1 / sc1)))
    cdef double h, g0, g1, d2, dm, h1
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    if max_step > 0.0 and h > max_step:
        h = max_step
    if not _rhs(field, p, y0 + direction * h * f0, y1 + direction * h * f1, &g0, &g1):
        return h * 0.01
    d2 = sqrt(0.5 * (_sq((g0 - f0) / sc0) + _sq((g1 - f1) / sc1))) / h
    dm = d1 if d1 > d2 else d2
    if dm <= 1e-15:
        h1 = h * 1e-3
        if h1 < 1e-6:
            h1 = 1e-6
    else:
        h1 = pow(0.01 / dm, 0.2)
    if 100.0 * h < h1:
        h = 100.0 * h
    else:
        h = h1
    if max_step > 0.0 and h > max_step:
        h = max_step
    return h


def dopri_run(int field, p, double y0, double y1, double t0, double t_end,
              double h0, double rtol, double atol, double max_step,
              int ev_index, double ev_value, int ev_dir, bint ev_armed,
              long max_steps, bint store):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double* pp = &pv[0]
    cdef double direction = 1.0 if t_end >= t0 else -1.0
    cdef double t = t0
    cdef double f0 = 0.0, f1 = 0.0, h, hs, hd, remaining
    cdef double k20, k21, k30, k31, k40, k41, k50, k51, k60, k61, k70, k71
    cdef double n0 = 0.0, n1 = 0.0, e0, e1, sc0, sc1, err, fac
    cdef double g_old, g_new, h_event = 0.0
    cdef double u0, u1, d0, d1, theta
    cdef int ip
    cdef bint ok, armed = ev_armed, last_rejected = False
    cdef long nsteps = 0
    cdef int status = 0
    cdef long cap = 0, n = 0
    cdef double* buf = NULL
    cdef double* grown = NULL

    if store:
        cap = 1024
        buf = <double*> malloc(3 * cap * sizeof(double))
        if buf == NULL:
            raise MemoryError()
        buf[0] = t
        buf[1] = y0
        buf[2] = y1
        n = 1
    try:
        if not _rhs(field, pp, y0, y1, &f0, &f1):
            status = 4
            h = 0.0
        else:
            if h0 > 0.0:
                h = h0
            else:
                h = _initial_step(field, pp, y0, y1, f0, f1, rtol, atol, direction, max_step)
            if max_step > 0.0 and h > max_step:
                h = max_step
            g_old = (y0 if ev_index == 0 else y1) - ev_value
            if ev_dir != 0 and g_old * ev_dir < 0.0:
                armed = True
            with nogil:
                while True:
                    remaining = (t_end - t) * direction
                    if remaining <= 0.0:
                        break
                    if nsteps >= max_steps:
                        status = 2
                        break
                    if h < 16.0 * UROUND * (fabs(t) if fabs(t) > 1.0 else 1.0):
                        status = 3
                        break
                    hs = h
                    if hs >= remaining:
                        hs = remaining
                    hd = direction * hs
                    ok = _rhs(field, pp, y0 + hd * A21 * f0, y1 + hd * A21 * f1, &k20, &k21)
                    if ok:
                        ok = _rhs(field, pp, y0 + hd * (A31 * f0 + A32 * k20),
                                  y1 + hd * (A31 * f1 + A32 * k21), &k30, &k31)
                    if ok:
                        ok = _rhs(field, pp, y0 + hd * (A41 * f0 + A42 * k20 + A43 * k30),
                                  y1 + hd * (A41 * f1 + A42 * k21 + A43 * k31), &k40, &k41)
                    if ok:
                        ok = _rhs(field, pp,
                                  y0 + hd * (A51 * f0 + A52 * k20 + A53 * k30 + A54 * k40),
                                  y1 + hd * (A51 * f1 + A52 * k21 + A53 * k31 + A54 * k41),
                                  &k50, &k51)
                    if ok:
                        ok = _rhs(field, pp,
                                  y0 + hd * (A61 * f0 + A62 * k20 + A63 * k30 + A64 * k40 + A65 * k50),
                                  y1 + hd * (A61 * f1 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51),
                                  &k60, &k61)
                    if ok:
                        n0 = y0 + hd * (B1 * f0 + B3 * k30 + B4 * k40 + B5 * k50 + B6 * k60)
                        n1 = y1 + hd * (B1 * f1 + B3 * k31 + B4 * k41 + B5 * k51 + B6 * k61)
                        ok = _rhs(field, pp, n0, n1, &k70, &k71)
                    if not ok:
                        h = hs * FAC_MIN
                        last_rejected = True
                        if h < 16.0 * UROUND * (fabs(t) if fabs(t) > 1.0 else 1.0):
                            status = 4
                            break
                        continue
                    e0 = hd * (E1 * f0 + E3 * k30 + E4 * k40 + E5 * k50 + E6 * k60 + E7 * k70)
                    e1 = hd * (E1 * f1 + E3 * k31 + E4 * k41 + E5 * k51 + E6 * k61 + E7 * k71)
                    sc0 = atol + rtol * (fabs(y0) if fabs(y0) > fabs(n0) else fabs(n0))
                    sc1 = atol + rtol * (fabs(y1) if fabs(y1) > fabs(n1) else fabs(n1))
                    err = sqrt(0.5 * (_sq(e0 / sc0) + _sq(e1 / sc1)))
                    if not err <= 1.0:
                        if err != err:
                            fac = FAC_MIN
                        else:
                            fac = SAFETY * pow(err, -0.2)
                            if fac < FAC_MIN:
                                fac = FAC_MIN
                        h = hs * fac
                        last_rejected = True
                        continue
                    nsteps += 1
                    if ev_dir != 0:
                        if ev_index == 0:
                            u0, u1, d0, d1 = y0, n0, hd * f0, hd * k70
                        else:
                            u0, u1, d0, d1 = y1, n1, hd * f1, hd * k71
                        theta = 0.0
                        for ip in range(4):
                            g_new = _hermite(u0, u1, d0, d1, PROBES[ip]) - ev_value
                            if armed and g_old * ev_dir <= 0.0 and g_new * ev_dir > 0.0:
                                theta = PROBES[ip]
                                break
                            if g_new * ev_dir < 0.0:
                                armed = True
                            g_old = g_new
                        if theta > 0.0:
                            status = 1
                            h_event = theta * hs
                            break
                    t = t + hd
                    if hs == remaining:
                        t = t_end
                    y0 = n0
                    y1 = n1
                    f0 = k70
                    f1 = k71
                    if store:
                        if n == cap:
                            cap = cap * 2
                            grown = <double*> realloc(buf, 3 * cap * sizeof(double))
                            if grown == NULL:
                                status = 5
                                break
                            buf = grown
                        buf[3 * n] = t
                        buf[3 * n + 1] = y0
                        buf[3 * n + 2] = y1
                        n += 1
                    if err == 0.0:
                        fac = FAC_MAX
                    else:
                        fac = SAFETY * pow(err, -0.2)
                        if fac < FAC_MIN:
                            fac = FAC_MIN
                        if fac > FAC_MAX:
                            fac = FAC_MAX
                    if last_rejected and fac > 1.0:
                        fac = 1.0
                    last_rejected = False
                    h = hs * fac
                    if max_step > 0.0 and h > max_step:
                        h = max_step
        if status == 5:
            raise MemoryError()
        if store:
            out = np.empty((n, 3), dtype=np.float64)
            for i in range(n):
                out[i, 0] = buf[3 * i]
                out[i, 1] = buf[3 * i + 1]
                out[i, 2] = buf[3 * i + 2]
            ts = out[:, 0].copy()
            ys = out[:, 1:].copy()
        else:
            ts = np.array([t])
            ys = np.array([[y0, y1]])
    finally:
        if buf != NULL:
            free(buf)
    return status, t, y0, y1, h, h_event, ts, ys, nsteps
