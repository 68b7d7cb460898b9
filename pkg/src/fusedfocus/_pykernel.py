"""Pure-Python Dormand-Prince 5(4) kernels.

This module mirrors ``_ckernel.pyx`` operation for operation so the two
backends agree to rounding.  It also hosts the generic n-dimensional
integrator used for user supplied (callable) vector fields and for sliding
flows, which the compiled core does not cover.
"""
import math

import numpy as np

FIXED_K = 0
ARCTAN_XY = 1
BLOWUP = 2
FAST = 3

STATUS_DONE = 0
STATUS_EVENT = 1
STATUS_MAX_STEPS = 2
STATUS_UNDERFLOW = 3
STATUS_DOMAIN = 4

# Dormand-Prince tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
UROUND = 2.220446049250313e-16


# fractions of an accepted step where event functions are sampled, so a
# double crossing inside one step is not missed
PROBES = (0.25, 0.5, 0.75, 1.0)


def hermite(u0, u1, d0, d1, th):
    """Cubic Hermite interpolant between step ends with scaled slopes ``d0``, ``d1``."""
    th2 = th * th
    th3 = th2 * th
    return ((2.0 * th3 - 3.0 * th2 + 1.0) * u0 + (th3 - 2.0 * th2 + th) * d0
            + (3.0 * th2 - 2.0 * th3) * u1 + (th3 - th2) * d1)


def rhs(field, p, x, y):
    """Evaluate a built-in Welander vector field; returns ``(dx, dy, ok)``."""
    alpha = p[0]
    beta = p[1]
    eps = p[2]
    a = p[3]
    if field == FIXED_K or field == ARCTAN_XY:
        if field == FIXED_K:
            k = p[4]
        else:
            k = math.atan(y / a) / math.pi + 0.5
        dx = 1.0 - x - k * x
        dy = (beta - beta * eps - k * eps - alpha - (beta + k) * y
              - (alpha * beta - alpha) * x)
        return dx, dy, True
    # blow-up chart, y holds k
    k = y
    delta = p[5]
    if k <= delta or k >= 1.0 - delta:
        return 0.0, 0.0, False
    s = math.sin(math.pi * k)
    c = math.cos(math.pi * k)
    core = beta - beta * eps - k * eps - alpha - (alpha * beta - alpha) * x
    g = s * s * core + a * (beta + k) * s * c
    if field == BLOWUP:
        return 1.0 - x - k * x, g / (a * math.pi), True
    return a * (1.0 - x - k * x), g / math.pi, True


def rk_step(field, p, y0, y1, h):
    """One unadapted 5th-order step; returns ``(y0, y1, ok)``."""
    k10, k11, ok = rhs(field, p, y0, y1)
    if not ok:
        return y0, y1, False
    k20, k21, ok = rhs(field, p, y0 + h * A21 * k10, y1 + h * A21 * k11)
    if not ok:
        return y0, y1, False
    k30, k31, ok = rhs(field, p, y0 + h * (A31 * k10 + A32 * k20),
                      y1 + h * (A31 * k11 + A32 * k21))
    if not ok:
        return y0, y1, False
    k40, k41, ok = rhs(field, p, y0 + h * (A41 * k10 + A42 * k20 + A43 * k30),
                      y1 + h * (A41 * k11 + A42 * k21 + A43 * k31))
    if not ok:
        return y0, y1, False
    k50, k51, ok = rhs(field, p,
                      y0 + h * (A51 * k10 + A52 * k20 + A53 * k30 + A54 * k40),
                      y1 + h * (A51 * k11 + A52 * k21 + A53 * k31 + A54 * k41))
    if not ok:
        return y0, y1, False
    k60, k61, ok = rhs(field, p,
                      y0 + h * (A61 * k10 + A62 * k20 + A63 * k30 + A64 * k40 + A65 * k50),
                      y1 + h * (A61 * k11 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51))
    if not ok:
        return y0, y1, False
    n0 = y0 + h * (B1 * k10 + B3 * k30 + B4 * k40 + B5 * k50 + B6 * k60)
    n1 = y1 + h * (B1 * k11 + B3 * k31 + B4 * k41 + B5 * k51 + B6 * k61)
    return n0, n1, True


def _initial_step(field, p, y0, y1, f0, f1, rtol, atol, direction, max_step):
    sc0 = atol + rtol * abs(y0)
    sc1 = atol + rtol * abs(y1)
    d0 = math.sqrt(0.5 * ((y0 / sc0) ** 2 + (y1 / sc1) ** 2))
    d1 = math.sqrt(0.5 * ((f0 / sc0) ** 2 + (f1 / sc1) ** 2))
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    if max_step > 0.0 and h > max_step:
        h = max_step
    g0, g1, ok = rhs(field, p, y0 + direction * h * f0, y1 + direction * h * f1)
    if not ok:
        return h * 0.01
    d2 = math.sqrt(0.5 * (((g0 - f0) / sc0) ** 2 + ((g1 - f1) / sc1) ** 2)) / h
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h = min(100.0 * h, h1)
    if max_step > 0.0 and h > max_step:
        h = max_step
    return h


def dopri_run(field, p, y0, y1, t0, t_end, h0, rtol, atol, max_step,
              ev_index, ev_value, ev_dir, ev_armed, max_steps, store):
    """Adaptive integration of a built-in field from ``t0`` towards ``t_end``.

    Stops at ``t_end``, at the first accepted step across which
    ``y[ev_index] - ev_value`` changes sign in direction ``ev_dir`` (the state
    returned is then the last point *before* the crossing and ``h_event`` the
    crossing step), or on failure.

    Returns ``(status, t, y0, y1, h_next, h_event, ts, ys, nsteps)``.
    """
    direction = 1.0 if t_end >= t0 else -1.0
    t = t0
    ts = [t] if store else []
    ys = [(y0, y1)] if store else []
    f0, f1, ok = rhs(field, p, y0, y1)
    if not ok:
        return STATUS_DOMAIN, t, y0, y1, 0.0, 0.0, ts, ys, 0
    if h0 > 0.0:
        h = h0
    else:
        h = _initial_step(field, p, y0, y1, f0, f1, rtol, atol, direction, max_step)
    if max_step > 0.0 and h > max_step:
        h = max_step
    g_old = (y0 if ev_index == 0 else y1) - ev_value
    armed = ev_armed
    if ev_dir != 0 and g_old * ev_dir < 0.0:
        armed = True
    nsteps = 0
    last_rejected = False
    status = STATUS_DONE
    h_event = 0.0
    while True:
        remaining = (t_end - t) * direction
        if remaining <= 0.0:
            break
        if nsteps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < 16.0 * UROUND * max(1.0, abs(t)):
            status = STATUS_UNDERFLOW
            break
        hs = h
        if hs >= remaining:
            hs = remaining
        hd = direction * hs
        # stages
        k20, k21, ok = rhs(field, p, y0 + hd * A21 * f0, y1 + hd * A21 * f1)
        if ok:
            k30, k31, ok = rhs(field, p, y0 + hd * (A31 * f0 + A32 * k20),
                              y1 + hd * (A31 * f1 + A32 * k21))
        if ok:
            k40, k41, ok = rhs(field, p, y0 + hd * (A41 * f0 + A42 * k20 + A43 * k30),
                              y1 + hd * (A41 * f1 + A42 * k21 + A43 * k31))
        if ok:
            k50, k51, ok = rhs(field, p,
                              y0 + hd * (A51 * f0 + A52 * k20 + A53 * k30 + A54 * k40),
                              y1 + hd * (A51 * f1 + A52 * k21 + A53 * k31 + A54 * k41))
        if ok:
            k60, k61, ok = rhs(field, p,
                              y0 + hd * (A61 * f0 + A62 * k20 + A63 * k30 + A64 * k40 + A65 * k50),
                              y1 + hd * (A61 * f1 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51))
        if ok:
            n0 = y0 + hd * (B1 * f0 + B3 * k30 + B4 * k40 + B5 * k50 + B6 * k60)
            n1 = y1 + hd * (B1 * f1 + B3 * k31 + B4 * k41 + B5 * k51 + B6 * k61)
            k70, k71, ok = rhs(field, p, n0, n1)
        if not ok:
            h = hs * FAC_MIN
            last_rejected = True
            if h < 16.0 * UROUND * max(1.0, abs(t)):
                status = STATUS_DOMAIN
                break
            continue
        e0 = hd * (E1 * f0 + E3 * k30 + E4 * k40 + E5 * k50 + E6 * k60 + E7 * k70)
        e1 = hd * (E1 * f1 + E3 * k31 + E4 * k41 + E5 * k51 + E6 * k61 + E7 * k71)
        sc0 = atol + rtol * max(abs(y0), abs(n0))
        sc1 = atol + rtol * max(abs(y1), abs(n1))
        err = math.sqrt(0.5 * ((e0 / sc0) ** 2 + (e1 / sc1) ** 2))
        if not err <= 1.0:
            if err != err:
                fac = FAC_MIN
            else:
                fac = max(FAC_MIN, SAFETY * err ** -0.2)
            h = hs * fac
            last_rejected = True
            continue
        # accepted
        nsteps += 1
        if ev_dir != 0:
            if ev_index == 0:
                u0, u1, d0, d1 = y0, n0, hd * f0, hd * k70
            else:
                u0, u1, d0, d1 = y1, n1, hd * f1, hd * k71
            theta = 0.0
            for th in PROBES:
                g_new = hermite(u0, u1, d0, d1, th) - ev_value
                if armed and g_old * ev_dir <= 0.0 and g_new * ev_dir > 0.0:
                    theta = th
                    break
                if g_new * ev_dir < 0.0:
                    armed = True
                g_old = g_new
            if theta > 0.0:
                status = STATUS_EVENT
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
            ts.append(t)
            ys.append((y0, y1))
        if err == 0.0:
            fac = FAC_MAX
        else:
            fac = min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
        if last_rejected and fac > 1.0:
            fac = 1.0
        last_rejected = False
        h = hs * fac
        if max_step > 0.0 and h > max_step:
            h = max_step
    if not store:
        ts = [t]
        ys = [(y0, y1)]
    return status, t, y0, y1, h, h_event, ts, ys, nsteps


# ---------------------------------------------------------------------------
# generic n-dimensional integrator over Python callables

def _norm(err, y, ynew, rtol, atol):
    sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
    return float(np.sqrt(np.mean((err / sc) ** 2)))


def rk_step_callable(f, y, h):
    """One unadapted 5th-order Dormand-Prince step of ``y' = f(y)``."""
    k1 = f(y)
    k2 = f(y + h * A21 * k1)
    k3 = f(y + h * (A31 * k1 + A32 * k2))
    k4 = f(y + h * (A41 * k1 + A42 * k2 + A43 * k3))
    k5 = f(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
    k6 = f(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
    return y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)


def dopri_run_callable(f, y0, t0, t_end, h0, rtol, atol, max_step,
                       events=(), max_steps=10**6, store=True, project=None):
    """Adaptive integration of ``y' = f(y)`` for an arbitrary callable.

    ``events`` is a sequence of ``(g, direction, armed)`` triples.  The run
    stops at the first accepted step across which some ``g`` changes sign in
    its direction; the returned state is the point before that step.

    Returns ``(status, t, y, h_next, h_event, event_index, ts, ys, nsteps)``.
    """
    y = np.array(y0, dtype=float)
    direction = 1.0 if t_end >= t0 else -1.0
    t = t0
    ts = [t]
    ys = [y.copy()]
    fy = np.asarray(f(y), dtype=float)
    if not np.all(np.isfinite(fy)):
        return STATUS_DOMAIN, t, y, 0.0, 0.0, -1, ts, ys, 0
    if h0 > 0.0:
        h = h0
    else:
        sc = atol + rtol * np.abs(y)
        d0 = float(np.sqrt(np.mean((y / sc) ** 2)))
        d1 = float(np.sqrt(np.mean((fy / sc) ** 2)))
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h = min(h, 1e-2)
    if max_step > 0.0:
        h = min(h, max_step)
    g_old = [g(y) for g, _, _ in events]
    armed = [bool(a) or g_old[i] * d < 0.0 for i, (g, d, a) in enumerate(events)]
    nsteps = 0
    last_rejected = False
    status = STATUS_DONE
    h_event = 0.0
    which = -1
    while True:
        remaining = (t_end - t) * direction
        if remaining <= 0.0:
            break
        if nsteps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < 16.0 * UROUND * max(1.0, abs(t)):
            status = STATUS_UNDERFLOW
            break
        hs = min(h, remaining)
        hd = direction * hs
        k1 = fy
        k2 = f(y + hd * A21 * k1)
        k3 = f(y + hd * (A31 * k1 + A32 * k2))
        k4 = f(y + hd * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = f(y + hd * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = f(y + hd * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        ynew = y + hd * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        if project is not None:
            ynew = project(ynew)
        k7 = np.asarray(f(ynew), dtype=float)
        e = hd * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        err = _norm(e, y, ynew, rtol, atol)
        if not err <= 1.0:
            h = hs * (FAC_MIN if err != err else max(FAC_MIN, SAFETY * err ** -0.2))
            last_rejected = True
            continue
        nsteps += 1
        theta = 0.0
        for th in PROBES:
            yt = ynew if th == 1.0 else hermite(y, ynew, hd * k1, hd * k7, th)
            for i, (g, d, _) in enumerate(events):
                gn = g(yt)
                if armed[i] and g_old[i] * d <= 0.0 and gn * d > 0.0:
                    theta, which = th, i
                    break
                if gn * d < 0.0:
                    armed[i] = True
                g_old[i] = gn
            if theta > 0.0:
                break
        if theta > 0.0:
            status = STATUS_EVENT
            h_event = theta * hs
            break
        t = t_end if hs == remaining else t + hd
        y = ynew
        fy = k7
        if store:
            ts.append(t)
            ys.append(y.copy())
        fac = FAC_MAX if err == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
        if last_rejected and fac > 1.0:
            fac = 1.0
        last_rejected = False
        h = hs * fac
        if max_step > 0.0:
            h = min(h, max_step)
    if not store:
        ts = [t]
        ys = [y.copy()]
    return status, t, y, h, h_event, which, ts, ys, nsteps
