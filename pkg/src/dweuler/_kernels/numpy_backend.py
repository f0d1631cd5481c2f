"""Vectorized (numpy) implementations of the hot stencil kernels.

This is the fallback backend; the compiled extension mirrors these
expressions operation-for-operation (same association, no FMA) so both
backends produce bit-identical fields.

State layout: U[j, i, comp] with j the x2 index, i the x1 index and
components (rho, m1, m2, E).  All shifts are periodic.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _primitives(U, gamma):
    rho = U[:, :, 0]
    m1 = U[:, :, 1]
    m2 = U[:, :, 2]
    E = U[:, :, 3]
    u1 = m1 / rho
    u2 = m2 / rho
    eint = E - 0.5 * (m1 * m1 + m2 * m2) / rho
    p = (gamma - 1.0) * eint
    return rho, m1, m2, E, u1, u2, p, eint


def max_wave_speed(U, gamma):
    """max over cells and axes of |u_axis| + c with c = sqrt(gamma p / rho)."""
    rho, m1, m2, E, u1, u2, p, eint = _primitives(U, gamma)
    c = np.sqrt(gamma * p / rho)
    return float((np.maximum(np.abs(u1), np.abs(u2)) + c).max())


def lf_step(U, dt, h, gamma, global_lambda=0.0):
    """One forward-Euler step of the (local) Lax-Friedrichs scheme.

    Face flux: 0.5 (f_L + f_R) - 0.5 lambda (U_R - U_L) with lambda the max
    of |u_n| + c over the two neighbours (or `global_lambda` if positive).
    """
    rho, m1, m2, E, u1, u2, p, eint = _primitives(U, gamma)
    c = np.sqrt(gamma * p / rho)

    fx = np.stack([m1, m1 * u1 + p, m2 * u1, (E + p) * u1], axis=-1)
    fy = np.stack([m2, m1 * u2, m2 * u2 + p, (E + p) * u2], axis=-1)
    sx = np.abs(u1) + c
    sy = np.abs(u2) + c

    if global_lambda > 0.0:
        lam_x = np.full_like(sx, global_lambda)
        lam_y = lam_x
    else:
        lam_x = np.maximum(sx, np.roll(sx, -1, axis=1))
        lam_y = np.maximum(sy, np.roll(sy, -1, axis=0))

    Fx = 0.5 * (fx + np.roll(fx, -1, axis=1)) \
        - 0.5 * lam_x[:, :, None] * (np.roll(U, -1, axis=1) - U)
    Fy = 0.5 * (fy + np.roll(fy, -1, axis=0)) \
        - 0.5 * lam_y[:, :, None] * (np.roll(U, -1, axis=0) - U)

    div = (Fx - np.roll(Fx, 1, axis=1)) + (Fy - np.roll(Fy, 1, axis=0))
    return U - (dt / h) * div


def vfv_step(U, dt, h, gamma, mu_rho, mu_u):
    """One forward-Euler step of the viscosity finite-volume surrogate.

    Central flux plus face viscosities.  Mass diffuses with coefficient
    mu_rho (flux j = -mu_rho [[rho]]) and, two-velocity style, the diffused
    mass carries the donor cell's momentum and kinetic energy, which keeps
    velocity and pressure exactly constant across contact layers and keeps
    internal energy invariant under pure mass diffusion.  Velocities
    diffuse with mu_u {rho} [[u]] and their viscous work enters the energy
    flux; internal energy diffuses with mu_rho.  Every term is in flux
    form, so all four totals are conserved to rounding.
    """
    rho, m1, m2, E, u1, u2, p, eint = _primitives(U, gamma)

    def faces(axis, un, mn):
        sh = -1
        rhoR = np.roll(rho, sh, axis=axis)
        m1R = np.roll(m1, sh, axis=axis)
        m2R = np.roll(m2, sh, axis=axis)
        ER = np.roll(E, sh, axis=axis)
        u1R = np.roll(u1, sh, axis=axis)
        u2R = np.roll(u2, sh, axis=axis)
        pR = np.roll(p, sh, axis=axis)
        eintR = np.roll(eint, sh, axis=axis)
        unR = np.roll(un, sh, axis=axis)
        mnR = np.roll(mn, sh, axis=axis)

        du1 = u1R - u1
        du2 = u2R - u2
        rbar = 0.5 * (rho + rhoR)
        u1bar = 0.5 * (u1 + u1R)
        u2bar = 0.5 * (u2 + u2R)

        j = -mu_rho * (rhoR - rho)       # diffusive mass flux, L->R positive
        donor = j > 0.0                  # upwind side of the diffused mass
        ud1 = np.where(donor, u1, u1R)
        ud2 = np.where(donor, u2, u2R)

        f_rho = 0.5 * (mn + mnR) + j
        f_m1 = 0.5 * (m1 * un + m1R * unR) + j * ud1 - mu_u * rbar * du1
        f_m2 = 0.5 * (m2 * un + m2R * unR) + j * ud2 - mu_u * rbar * du2
        f_E = 0.5 * ((E + p) * un + (ER + pR) * unR) \
            - mu_rho * (eintR - eint) \
            + j * (0.5 * (ud1 * ud1 + ud2 * ud2)) \
            - mu_u * rbar * (du1 * u1bar + du2 * u2bar)
        if axis == 1:
            f_m1 = f_m1 + 0.5 * (p + pR)
        else:
            f_m2 = f_m2 + 0.5 * (p + pR)
        return np.stack([f_rho, f_m1, f_m2, f_E], axis=-1)

    Fx = faces(1, u1, m1)
    Fy = faces(0, u2, m2)
    div = (Fx - np.roll(Fx, 1, axis=1)) + (Fy - np.roll(Fy, 1, axis=0))
    return U - (dt / h) * div
