# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels.

Mirror of numpy_backend expression-for-expression: the same association and
rounding (the extension is compiled with FMA contraction disabled), so both
backends produce bit-identical fields.
"""

from libc.math cimport sqrt, fabs

import numpy as np

NAME = "compiled"


cdef inline Py_ssize_t _wrap_up(Py_ssize_t i, Py_ssize_t n) nogil:
    return i + 1 if i + 1 < n else 0


cdef inline Py_ssize_t _wrap_dn(Py_ssize_t i, Py_ssize_t n) nogil:
    return i - 1 if i > 0 else n - 1


cdef void _prims(double[:, :, ::1] U, double gamma,
                 double[:, ::1] u1, double[:, ::1] u2,
                 double[:, ::1] p, double[:, ::1] eint) nogil:
    cdef Py_ssize_t n = U.shape[0], m = U.shape[1], j, i
    cdef double rho, m1, m2, E
    for j in range(n):
        for i in range(m):
            rho = U[j, i, 0]
            m1 = U[j, i, 1]
            m2 = U[j, i, 2]
            E = U[j, i, 3]
            u1[j, i] = m1 / rho
            u2[j, i] = m2 / rho
            eint[j, i] = E - 0.5 * (m1 * m1 + m2 * m2) / rho
            p[j, i] = (gamma - 1.0) * eint[j, i]


def max_wave_speed(double[:, :, ::1] U, double gamma):
    cdef Py_ssize_t n = U.shape[0], m = U.shape[1], j, i
    cdef double rho, m1, m2, E, u1, u2, p, c, s, best = -1.0
    with nogil:
        for j in range(n):
            for i in range(m):
                rho = U[j, i, 0]
                m1 = U[j, i, 1]
                m2 = U[j, i, 2]
                E = U[j, i, 3]
                u1 = m1 / rho
                u2 = m2 / rho
                p = (gamma - 1.0) * (E - 0.5 * (m1 * m1 + m2 * m2) / rho)
                c = sqrt(gamma * p / rho)
                s = (fabs(u1) if fabs(u1) > fabs(u2) else fabs(u2)) + c
                if s > best:
                    best = s
    return best


def lf_step(double[:, :, ::1] U, double dt, double h, double gamma,
            double global_lambda=0.0):
    cdef Py_ssize_t n = U.shape[0], m = U.shape[1], j, i, k, ip, jp, im, jm
    cdef double r = dt / h
    cdef double lam

    u1_a = np.empty((n, m)); u2_a = np.empty((n, m)); p_a = np.empty((n, m))
    e_a = np.empty((n, m))
    c_a = np.empty((n, m)); sx_a = np.empty((n, m)); sy_a = np.empty((n, m))
    fx_a = np.empty((n, m, 4)); fy_a = np.empty((n, m, 4))
    Fx_a = np.empty((n, m, 4)); Fy_a = np.empty((n, m, 4))
    out_a = np.empty((n, m, 4))
    cdef double[:, ::1] u1 = u1_a, u2 = u2_a, p = p_a, eint = e_a
    cdef double[:, ::1] c = c_a, sx = sx_a, sy = sy_a
    cdef double[:, :, ::1] fx = fx_a, fy = fy_a, Fx = Fx_a, Fy = Fy_a, out = out_a
    cdef double rho, m1, m2, E

    with nogil:
        _prims(U, gamma, u1, u2, p, eint)
        for j in range(n):
            for i in range(m):
                rho = U[j, i, 0]
                m1 = U[j, i, 1]
                m2 = U[j, i, 2]
                E = U[j, i, 3]
                c[j, i] = sqrt(gamma * p[j, i] / rho)
                fx[j, i, 0] = m1
                fx[j, i, 1] = m1 * u1[j, i] + p[j, i]
                fx[j, i, 2] = m2 * u1[j, i]
                fx[j, i, 3] = (E + p[j, i]) * u1[j, i]
                fy[j, i, 0] = m2
                fy[j, i, 1] = m1 * u2[j, i]
                fy[j, i, 2] = m2 * u2[j, i] + p[j, i]
                fy[j, i, 3] = (E + p[j, i]) * u2[j, i]
                sx[j, i] = fabs(u1[j, i]) + c[j, i]
                sy[j, i] = fabs(u2[j, i]) + c[j, i]
        for j in range(n):
            for i in range(m):
                ip = _wrap_up(i, m)
                jp = _wrap_up(j, n)
                if global_lambda > 0.0:
                    lam = global_lambda
                else:
                    lam = sx[j, i] if sx[j, i] > sx[j, ip] else sx[j, ip]
                for k in range(4):
                    Fx[j, i, k] = 0.5 * (fx[j, i, k] + fx[j, ip, k]) \
                        - 0.5 * lam * (U[j, ip, k] - U[j, i, k])
                if global_lambda > 0.0:
                    lam = global_lambda
                else:
                    lam = sy[j, i] if sy[j, i] > sy[jp, i] else sy[jp, i]
                for k in range(4):
                    Fy[j, i, k] = 0.5 * (fy[j, i, k] + fy[jp, i, k]) \
                        - 0.5 * lam * (U[jp, i, k] - U[j, i, k])
        for j in range(n):
            for i in range(m):
                im = _wrap_dn(i, m)
                jm = _wrap_dn(j, n)
                for k in range(4):
                    out[j, i, k] = U[j, i, k] - r * (
                        (Fx[j, i, k] - Fx[j, im, k]) + (Fy[j, i, k] - Fy[jm, i, k]))
    return out_a


def vfv_step(double[:, :, ::1] U, double dt, double h, double gamma,
             double mu_rho, double mu_u):
    cdef Py_ssize_t n = U.shape[0], m = U.shape[1], j, i, k, ip, jp, im, jm
    cdef double r = dt / h
    cdef double du1, du2, rbar, u1bar, u2bar, jm_flux, ud1, ud2

    u1_a = np.empty((n, m)); u2_a = np.empty((n, m)); p_a = np.empty((n, m))
    e_a = np.empty((n, m))
    Fx_a = np.empty((n, m, 4)); Fy_a = np.empty((n, m, 4))
    out_a = np.empty((n, m, 4))
    cdef double[:, ::1] u1 = u1_a, u2 = u2_a, p = p_a, eint = e_a
    cdef double[:, :, ::1] Fx = Fx_a, Fy = Fy_a, out = out_a

    with nogil:
        _prims(U, gamma, u1, u2, p, eint)
        for j in range(n):
            for i in range(m):
                # x1 faces: right neighbour, normal velocity u1
                ip = _wrap_up(i, m)
                du1 = u1[j, ip] - u1[j, i]
                du2 = u2[j, ip] - u2[j, i]
                rbar = 0.5 * (U[j, i, 0] + U[j, ip, 0])
                u1bar = 0.5 * (u1[j, i] + u1[j, ip])
                u2bar = 0.5 * (u2[j, i] + u2[j, ip])
                jm_flux = -mu_rho * (U[j, ip, 0] - U[j, i, 0])
                if jm_flux > 0.0:
                    ud1 = u1[j, i]; ud2 = u2[j, i]
                else:
                    ud1 = u1[j, ip]; ud2 = u2[j, ip]
                Fx[j, i, 0] = 0.5 * (U[j, i, 1] + U[j, ip, 1]) + jm_flux
                Fx[j, i, 1] = 0.5 * (U[j, i, 1] * u1[j, i] + U[j, ip, 1] * u1[j, ip]) \
                    + jm_flux * ud1 - mu_u * rbar * du1
                Fx[j, i, 1] = Fx[j, i, 1] + 0.5 * (p[j, i] + p[j, ip])
                Fx[j, i, 2] = 0.5 * (U[j, i, 2] * u1[j, i] + U[j, ip, 2] * u1[j, ip]) \
                    + jm_flux * ud2 - mu_u * rbar * du2
                Fx[j, i, 3] = 0.5 * ((U[j, i, 3] + p[j, i]) * u1[j, i]
                                     + (U[j, ip, 3] + p[j, ip]) * u1[j, ip]) \
                    - mu_rho * (eint[j, ip] - eint[j, i]) \
                    + jm_flux * (0.5 * (ud1 * ud1 + ud2 * ud2)) \
                    - mu_u * rbar * (du1 * u1bar + du2 * u2bar)
                # x2 faces: upper neighbour, normal velocity u2
                jp = _wrap_up(j, n)
                du1 = u1[jp, i] - u1[j, i]
                du2 = u2[jp, i] - u2[j, i]
                rbar = 0.5 * (U[j, i, 0] + U[jp, i, 0])
                u1bar = 0.5 * (u1[j, i] + u1[jp, i])
                u2bar = 0.5 * (u2[j, i] + u2[jp, i])
                jm_flux = -mu_rho * (U[jp, i, 0] - U[j, i, 0])
                if jm_flux > 0.0:
                    ud1 = u1[j, i]; ud2 = u2[j, i]
                else:
                    ud1 = u1[jp, i]; ud2 = u2[jp, i]
                Fy[j, i, 0] = 0.5 * (U[j, i, 2] + U[jp, i, 2]) + jm_flux
                Fy[j, i, 1] = 0.5 * (U[j, i, 1] * u2[j, i] + U[jp, i, 1] * u2[jp, i]) \
                    + jm_flux * ud1 - mu_u * rbar * du1
                Fy[j, i, 2] = 0.5 * (U[j, i, 2] * u2[j, i] + U[jp, i, 2] * u2[jp, i]) \
                    + jm_flux * ud2 - mu_u * rbar * du2
                Fy[j, i, 2] = Fy[j, i, 2] + 0.5 * (p[j, i] + p[jp, i])
                Fy[j, i, 3] = 0.5 * ((U[j, i, 3] + p[j, i]) * u2[j, i]
                                     + (U[jp, i, 3] + p[jp, i]) * u2[jp, i]) \
                    - mu_rho * (eint[jp, i] - eint[j, i]) \
                    + jm_flux * (0.5 * (ud1 * ud1 + ud2 * ud2)) \
                    - mu_u * rbar * (du1 * u1bar + du2 * u2bar)
        for j in range(n):
            for i in range(m):
                im = _wrap_dn(i, m)
                jm = _wrap_dn(j, n)
                for k in range(4):
                    out[j, i, k] = U[j, i, k] - r * (
                        (Fx[j, i, k] - Fx[j, im, k]) + (Fy[j, i, k] - Fy[jm, i, k]))
    return out_a
