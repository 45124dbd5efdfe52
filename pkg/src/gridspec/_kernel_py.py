"""Pure-Python two-bus integrator; reference for the compiled ``_kernel`` module.

Both implementations perform the same floating-point operations in the same
order, so they agree to rounding (usually bit for bit).
"""
from math import atan2, cos, pi, sin, sqrt

# parameter vector layout
P_KIND, P_MODE, P_W0, P_ELL, P_R, P_ELLF, P_VSTAR, P_PSET = range(8)
P_MP, P_TAU, P_XIP, P_XII, P_KP, P_KI, P_TAUD, P_D, P_TA = range(8, 17)
P_AV, P_AW, P_WP, P_KQV = range(17, 21)
N_PARAMS = 21
N_STATES = 7
N_MEAS = 5  # V, theta, p, q, omega_ref

KIND_DROOP, KIND_PI, KIND_GFL = 0, 1, 2
MODE_NONE, MODE_LAG = 0, 1
DIVERGENCE_LIMIT = 1e6


def _rhs(P, t, x, dx, meas):
    kind = P[P_KIND]
    w0 = P[P_W0]
    ell = P[P_ELL]
    r = P[P_R]
    vstar = P[P_VSTAR]
    pset = P[P_PSET]
    wp = P[P_WP]

    swt = sin(wp * t)
    vg_mag = vstar + P[P_AV] * swt
    thg = (P[P_AW] / wp) * (1.0 - cos(wp * t))
    vg_r = vg_mag * cos(thg)
    vg_i = vg_mag * sin(thg)

    i_r = x[0]
    i_i = x[1]
    if kind == KIND_GFL:
        thp = x[2]
        cp = cos(thp)
        sp = sin(thp)
        vm = x[5]
        id_ref = (pset + x[4]) / vm
        iq_ref = P[P_KQV] * (vm - vstar) / vm
        di_r = (id_ref * cp - iq_ref * sp - i_r) / P[P_TA]
        di_i = (id_ref * sp + iq_ref * cp - i_i) / P[P_TA]
        vb_r = vg_r + (r * i_r - w0 * ell * i_i) + ell * di_r
        vb_i = vg_i + (r * i_i + w0 * ell * i_r) + ell * di_i
        e = (vb_i * cp - vb_r * sp) / vstar
        dw = P[P_KP] * e + x[3]
        dx[0] = di_r
        dx[1] = di_i
        dx[2] = dw
        dx[3] = P[P_KI] * e
        dx[4] = (-P[P_D] * dw - x[4]) / P[P_TAUD]
        dx[5] = (sqrt(vb_r * vb_r + vb_i * vb_i) - vm) / P[P_TA]
        dx[6] = 0.0
    else:
        ellf = P[P_ELLF]
        th = x[2]
        vref_r = vstar * cos(th)
        vref_i = vstar * sin(th)
        if P[P_MODE] == MODE_LAG:
            vc_r = x[5]
            vc_i = x[6]
        else:
            vc_r = vref_r
            vc_i = vref_i
        lt = ell + ellf
        di_r = (vc_r - vg_r - r * i_r + w0 * lt * i_i) / lt
        di_i = (vc_i - vg_i - r * i_i - w0 * lt * i_r) / lt
        vb_r = vc_r - ellf * di_r + w0 * ellf * i_i
        vb_i = vc_i - ellf * di_i - w0 * ellf * i_r
        p = vb_r * i_r + vb_i * i_i
        pf = x[3]
        if kind == KIND_DROOP:
            dw = P[P_MP] * (pset - pf)
            dx[4] = 0.0
        else:
            dw = -P[P_XIP] * x[4] - P[P_XII] * (pf - pset)
            dx[4] = pf - pset
        dx[0] = di_r
        dx[1] = di_i
        dx[2] = dw
        dx[3] = (p - pf) / P[P_TAU]
        if P[P_MODE] == MODE_LAG:
            dx[5] = (vref_r - vb_r) / P[P_TA]
            dx[6] = (vref_i - vb_i) / P[P_TA]
        else:
            dx[5] = 0.0
            dx[6] = 0.0
    if meas is not None:
        meas[0] = sqrt(vb_r * vb_r + vb_i * vb_i)
        meas[1] = atan2(vb_i, vb_r)
        meas[2] = vb_r * i_r + vb_i * i_i
        meas[3] = vb_i * i_r - vb_r * i_i
        meas[4] = w0 + dw


def integrate(params, x0, dt, n_skip, n_record, out):
    """Fixed-step RK4 from ``t=0``; fills ``out[k] = (V, theta, p, q, omega_ref)``.

    Row ``k`` holds the measurements at ``t = (n_skip + k) * dt``; theta is
    unwrapped continuously from ``t=0``.  ``x0`` is updated in place to the
    final state.  Returns 0 on success or ``-(step+1)`` when the state norm
    exceeds the divergence limit.
    """
    P = [float(v) for v in params]
    x = [float(v) for v in x0]
    n = N_STATES
    k1 = [0.0] * n
    k2 = [0.0] * n
    k3 = [0.0] * n
    k4 = [0.0] * n
    xt = [0.0] * n
    meas = [0.0] * N_MEAS
    h = dt
    half = 0.5 * dt
    sixth = dt / 6.0
    two_pi = 2.0 * pi
    theta_prev = 0.0
    offset = 0.0
    n_total = n_skip + n_record
    for step in range(n_total + 1):
        t = step * h
        _rhs(P, t, x, k1, meas)
        raw = meas[1]
        if step == 0:
            theta_prev = raw
        else:
            d = raw + offset - theta_prev
            if d > pi:
                offset -= two_pi
            elif d < -pi:
                offset += two_pi
            theta_prev = raw + offset
        if step >= n_skip:
            if step == n_total:
                break
            row = out[step - n_skip]
            row[0] = meas[0]
            row[1] = theta_prev
            row[2] = meas[2]
            row[3] = meas[3]
            row[4] = meas[4]
        for j in range(n):
            xt[j] = x[j] + half * k1[j]
        _rhs(P, t + half, xt, k2, None)
        for j in range(n):
            xt[j] = x[j] + half * k2[j]
        _rhs(P, t + half, xt, k3, None)
        for j in range(n):
            xt[j] = x[j] + h * k3[j]
        _rhs(P, t + h, xt, k4, None)
        norm = 0.0
        for j in range(n):
            x[j] = x[j] + sixth * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            norm += x[j] * x[j]
        if not norm < DIVERGENCE_LIMIT * DIVERGENCE_LIMIT:
            for j in range(n):
                x0[j] = x[j]
            return -(step + 1)
    for j in range(n):
        x0[j] = x[j]
    return 0


def state_derivative(params, t, x):
    """One right-hand-side evaluation; returns ``(dx, meas)`` lists."""
    dx = [0.0] * N_STATES
    meas = [0.0] * N_MEAS
    _rhs([float(v) for v in params], float(t), [float(v) for v in x], dx, meas)
    return dx, meas
