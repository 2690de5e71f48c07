# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same signatures and results as :mod:`.pykernels`.

Loops run point-major over the time grid and spin-minor, so no ``(m, n)``
temporaries are allocated.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, acos, fabs

cnp.import_array()

cdef double FILTER_SWITCH = 1e-6


cdef inline double _filter_ratio(double theta, long pulses_n) nogil:
    cdef double half = 0.5 * theta
    cdef double c = cos(half)
    cdef double s, c2, u, u_prev, tmp
    cdef long j
    if fabs(c) >= FILTER_SWITCH:
        s = sin(pulses_n * half)
        return s * s / (c * c)
    c2 = cos(2.0 * half)
    u_prev = 0.0
    u = 1.0
    for j in range(pulses_n // 2 - 1):
        tmp = 2.0 * c2 * u - u_prev
        u_prev = u
        u = tmp
    s = 2.0 * sin(half) * u
    return s * s


def filter_ratio(theta, long pulses_n):
    cdef double[::1] th = np.ascontiguousarray(np.atleast_1d(theta), dtype=np.float64).ravel()
    out = np.empty(th.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(th.shape[0]):
        o[i] = _filter_ratio(th[i], pulses_n)
    return out.reshape(np.shape(theta))


def ramsey_product(w0, w1, dot, tau):
    cdef double[::1] a = np.ascontiguousarray(w0, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(w1, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(dot, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(tau, dtype=np.float64)
    out = np.ones(t.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double acc, h0, h1
    with nogil:
        for i in range(t.shape[0]):
            acc = 1.0
            for j in range(a.shape[0]):
                h0 = 0.5 * a[j] * t[i]
                h1 = 0.5 * b[j] * t[i]
                acc *= cos(h0) * cos(h1) + d[j] * sin(h0) * sin(h1)
            o[i] = acc
    return out


def echo_product(w0, w1, k_mod, tau):
    cdef double[::1] a = np.ascontiguousarray(w0, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(w1, dtype=np.float64)
    cdef double[::1] k = np.ascontiguousarray(k_mod, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(tau, dtype=np.float64)
    out = np.ones(t.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double acc, s
    with nogil:
        for i in range(t.shape[0]):
            acc = 1.0
            for j in range(a.shape[0]):
                s = sin(0.5 * a[j] * t[i]) * sin(0.5 * b[j] * t[i])
                acc *= 1.0 - 2.0 * k[j] * k[j] * s * s
            o[i] = acc
    return out


def dd_terms(w0, w1, dot, k_mod, tau, long pulses_n, bint summation=False):
    cdef double[::1] a = np.ascontiguousarray(w0, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(w1, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(dot, dtype=np.float64)
    cdef double[::1] k = np.ascontiguousarray(k_mod, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(tau, dtype=np.float64)
    out = np.ones(t.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double acc, a0, a1, arg, theta, s, mod
    cdef double excess = -1.0
    with nogil:
        for i in range(t.shape[0]):
            acc = 0.0 if summation else 1.0
            for j in range(a.shape[0]):
                a0 = a[j] * t[i]
                a1 = b[j] * t[i]
                arg = cos(a0) * cos(a1) - d[j] * sin(a0) * sin(a1)
                if fabs(arg) - 1.0 > excess:
                    excess = fabs(arg) - 1.0
                if arg > 1.0:
                    arg = 1.0
                elif arg < -1.0:
                    arg = -1.0
                theta = acos(arg)
                s = sin(0.5 * a0) * sin(0.5 * a1)
                mod = k[j] * k[j] * s * s * _filter_ratio(theta, pulses_n)
                if summation:
                    acc += mod
                else:
                    acc *= 1.0 - 2.0 * mod
            o[i] = 1.0 - 2.0 * acc if summation else acc
    return out, excess


cdef inline double _e2p(double k, double wa, double wb, double t) nogil:
    return (1.0 - 0.5 * k) + 0.5 * k * (
        cos(wa * t) + cos(wb * t) - 0.5 * cos((wa - wb) * t) - 0.5 * cos((wa + wb) * t))


cdef inline double _inner(double k, double ce4, double se4, double wa, double wb,
                          double t1, double t2, double big_t) nogil:
    cdef double c_term = cos(0.5 * wa * t1) * cos(0.5 * wa * t2) * sin(0.5 * wb * t1) * sin(0.5 * wb * t2)
    cdef double phi_ap = 0.5 * wa * (t1 + t2)
    cdef double phi_bp = 0.5 * wb * (t1 + t2)
    cdef double phi_bm = 0.5 * wb * (t1 - t2)
    return (-4.0 * k * k * c_term
            + 4.0 * k * ce4 * cos(wa * big_t + phi_ap + phi_bp)
            + 2.0 * k * k * cos(phi_bm) * cos(wa * big_t + phi_ap)
            + 4.0 * k * se4 * cos(wa * big_t + phi_ap - phi_bp))


def five_pulse(wa, wb, k, eta, t1, t2, big_t):
    cdef double[::1] fa = np.ascontiguousarray(wa, dtype=np.float64)
    cdef double[::1] fb = np.ascontiguousarray(wb, dtype=np.float64)
    cdef double[::1] kk = np.ascontiguousarray(k, dtype=np.float64)
    cdef double[::1] et = np.ascontiguousarray(eta, dtype=np.float64)
    cdef double[::1] x1 = np.ascontiguousarray(t1, dtype=np.float64)
    cdef double[::1] x2 = np.ascontiguousarray(t2, dtype=np.float64)
    cdef double[::1] xt = np.ascontiguousarray(big_t, dtype=np.float64)
    out = np.empty(x1.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double ap, am, bp, bm, base, blind, ia, ib, ce, se, ce4, se4
    with nogil:
        for i in range(x1.shape[0]):
            ap = 1.0
            am = 1.0
            bp = 1.0
            bm = 1.0
            for j in range(fa.shape[0]):
                base = _e2p(kk[j], fa[j], fb[j], x1[i]) * _e2p(kk[j], fa[j], fb[j], x2[i])
                blind = (sin(0.5 * fa[j] * x1[i]) * sin(0.5 * fa[j] * x2[i])
                         * sin(0.5 * fb[j] * x1[i]) * sin(0.5 * fb[j] * x2[i]))
                ce = cos(et[j]) ** 2
                se = sin(et[j]) ** 2
                ce4 = ce * ce
                se4 = se * se
                ia = _inner(kk[j], ce4, se4, fa[j], fb[j], x1[i], x2[i], xt[i])
                ib = _inner(kk[j], ce4, se4, fb[j], fa[j], x1[i], x2[i], xt[i])
                ap *= base - blind * ia
                am *= base + blind * ia
                bp *= base - blind * ib
                bm *= base + blind * ib
            o[i] = 0.25 * (ap - am + bp - bm)
    return out
