# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled two-bus integrator.  Mirrors ``_kernel_py`` operation for operation."""
from libc.math cimport atan2, cos, sin, sqrt, M_PI

cdef enum:
    N_STATES = 7
    N_MEAS = 5

cdef enum:
    P_KIND = 0
    P_MODE = 1
    P_W0 = 2
    P_ELL = 3
    P_R = 4
    P_ELLF = 5
    P_VSTAR = 6
    P_PSET = 7
    P_MP = 8
    P_TAU = 9
    P_XIP = 10
    P_XII = 11
    P_KP = 12
    P_KI = 13
    P_TAUD = 14
    P_D = 15
    P_TA = 16
    P_AV = 17
    P_AW = 18
    P_WP = 19
    P_KQV = 20

cdef double DIVERGENCE_LIMIT = 1e6


cdef inline void _rhs(const double* P, double t, const double* x, double* dx,
                      double* meas, bint want_meas) noexcept nogil:
    cdef int kind = <int>P[P_KIND]
    cdef double w0 = P[P_W0]
    cdef double ell = P[P_ELL]
    cdef double r = P[P_R]
    cdef double vstar = P[P_VSTAR]
    cdef double pset = P[P_PSET]
    cdef double wp = P[P_WP]
    cdef double swt, vg_mag, thg, vg_r, vg_i, i_r, i_i
    cdef double thp, cp, sp, vm, id_ref, iq_ref, di_r, di_i, vb_r, vb_i, e, dw
    cdef double ellf, th, vref_r, vref_i, vc_r, vc_i, lt, p, pf

    swt = sin(wp * t)
    vg_mag = vstar + P[P_AV] * swt
    thg = (P[P_AW] / wp) * (1.0 - cos(wp * t))
    vg_r = vg_mag * cos(thg)
    vg_i = vg_mag * sin(thg)

    i_r = x[0]
    i_i = x[1]
    if kind == 2:
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
        if P[P_MODE] == 1:
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
        if kind == 0:
            dw = P[P_MP] * (pset - pf)
            dx[4] = 0.0
        else:
            dw = -P[P_XIP] * x[4] - P[P_XII] * (pf - pset)
            dx[4] = pf - pset
        dx[0] = di_r
        dx[1] = di_i
        dx[2] = dw
        dx[3] = (p - pf) / P[P_TAU]
        if P[P_MODE] == 1:
            dx[5] = (vref_r - vb_r) / P[P_TA]
            dx[6] = (vref_i - vb_i) / P[P_TA]
        else:
            dx[5] = 0.0
            dx[6] = 0.0
    if want_meas:
        meas[0] = sqrt(vb_r * vb_r + vb_i * vb_i)
        meas[1] = atan2(vb_i, vb_r)
        meas[2] = vb_r * i_r + vb_i * i_i
        meas[3] = vb_i * i_r - vb_r * i_i
        meas[4] = w0 + dw


cdef long _integrate(const double* P, double* x, double dt, long n_skip, long n_record,
                     double[:, ::1] out) noexcept nogil:
    cdef double k1[N_STATES]
    cdef double k2[N_STATES]
    cdef double k3[N_STATES]
    cdef double k4[N_STATES]
    cdef double xt[N_STATES]
    cdef double meas[N_MEAS]
    cdef double h = dt
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double two_pi = 2.0 * M_PI
    cdef double theta_prev = 0.0
    cdef double offset = 0.0
    cdef double t, raw, d, norm
    cdef long n_total = n_skip + n_record
    cdef long step, row
    cdef int j
    for step in range(n_total + 1):
        t = step * h
        _rhs(P, t, x, k1, meas, True)
        raw = meas[1]
        if step == 0:
            theta_prev = raw
        else:
            d = raw + offset - theta_prev
            if d > M_PI:
                offset -= two_pi
            elif d < -M_PI:
                offset += two_pi
            theta_prev = raw + offset
        if step >= n_skip:
            if step == n_total:
                break
            row = step - n_skip
            out[row, 0] = meas[0]
            out[row, 1] = theta_prev
            out[row, 2] = meas[2]
            out[row, 3] = meas[3]
            out[row, 4] = meas[4]
        for j in range(N_STATES):
            xt[j] = x[j] + half * k1[j]
        _rhs(P, t + half, xt, k2, meas, False)
        for j in range(N_STATES):
            xt[j] = x[j] + half * k2[j]
        _rhs(P, t + half, xt, k3, meas, False)
        for j in range(N_STATES):
            xt[j] = x[j] + h * k3[j]
        _rhs(P, t + h, xt, k4, meas, False)
        norm = 0.0
        for j in range(N_STATES):
            x[j] = x[j] + sixth * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            norm += x[j] * x[j]
        if not norm < DIVERGENCE_LIMIT * DIVERGENCE_LIMIT:
            return -(step + 1)
    return 0


def integrate(double[::1] params, double[::1] x0, double dt, long n_skip, long n_record,
              double[:, ::1] out):
    """Compiled counterpart of :func:`gridspec._kernel_py.integrate`; releases the GIL."""
    if params.shape[0] < 21 or x0.shape[0] < N_STATES:
        raise ValueError("bad parameter or state vector length")
    if out.shape[0] < n_record or out.shape[1] < N_MEAS:
        raise ValueError("output buffer too small")
    cdef long status
    with nogil:
        status = _integrate(&params[0], &x0[0], dt, n_skip, n_record, out)
    return status
