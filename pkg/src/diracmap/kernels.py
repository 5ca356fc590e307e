"""Hot inner loops of the curved-equation integrator.

Every kernel exists twice: a vectorised numpy version and an explicit-loop
version that numba compiles.  The public wrappers pick one according to
``diracmap._accel.USE_NUMBA``; both stay importable so tests and the
benchmark can compare them directly.
"""

import numpy as np

from diracmap import _accel
from diracmap._accel import njit


def fd4_derivative_numpy(f, dx):
    return (8.0 * (np.roll(f, -1) - np.roll(f, 1)) - (np.roll(f, -2) - np.roll(f, 2))) / (12.0 * dx)


@njit
def fd4_derivative_loop(f, dx):
    n = f.shape[0]
    out = np.empty_like(f)
    c = 1.0 / (12.0 * dx)
    for j in range(n):
        jp1 = (j + 1) % n
        jp2 = (j + 2) % n
        jm1 = (j - 1) % n
        jm2 = (j - 2) % n
        out[j] = (8.0 * (f[jp1] - f[jm1]) - (f[jp2] - f[jm2])) * c
    return out


def curved_rhs_fd4_numpy(up, dn, half_logd, dx):
    rup = -(fd4_derivative_numpy(dn, dx) + half_logd * dn)
    rdn = -(fd4_derivative_numpy(up, dx) + half_logd * up)
    return rup, rdn


@njit
def curved_rhs_fd4_loop(up, dn, half_logd, dx):
    n = up.shape[0]
    rup = np.empty_like(up)
    rdn = np.empty_like(dn)
    c = 1.0 / (12.0 * dx)
    for j in range(n):
        jp1 = (j + 1) % n
        jp2 = (j + 2) % n
        jm1 = (j - 1) % n
        jm2 = (j - 2) % n
        ddn = (8.0 * (dn[jp1] - dn[jm1]) - (dn[jp2] - dn[jm2])) * c
        dup = (8.0 * (up[jp1] - up[jm1]) - (up[jp2] - up[jm2])) * c
        rup[j] = -(ddn + half_logd[j] * dn[j])
        rdn[j] = -(dup + half_logd[j] * up[j])
    return rup, rdn


def rk4_combine_numpy(y, k1, k2, k3, k4, dt):
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit
def rk4_combine_loop(y, k1, k2, k3, k4, dt):
    out = np.empty_like(y)
    c = dt / 6.0
    for j in range(y.shape[0]):
        out[j] = y[j] + c * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    return out


def density_numpy(up, dn):
    return up.real**2 + up.imag**2 + dn.real**2 + dn.imag**2


@njit
def density_loop(up, dn):
    n = up.shape[0]
    out = np.empty(n)
    for j in range(n):
        a = up[j]
        b = dn[j]
        out[j] = a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag
    return out


def fd4_derivative(f, dx):
    """Periodic fourth-order central first derivative."""
    if _accel.USE_NUMBA:
        return fd4_derivative_loop(f, dx)
    return fd4_derivative_numpy(f, dx)


def curved_rhs_fd4(up, dn, half_logd, dx):
    """Time derivative of (up, dn) under -sigma_x (d/dx + g), g = Omega'/(2 Omega)."""
    if _accel.USE_NUMBA:
        return curved_rhs_fd4_loop(up, dn, half_logd, dx)
    return curved_rhs_fd4_numpy(up, dn, half_logd, dx)


def rk4_combine(y, k1, k2, k3, k4, dt):
    if _accel.USE_NUMBA:
        return rk4_combine_loop(y, k1, k2, k3, k4, dt)
    return rk4_combine_numpy(y, k1, k2, k3, k4, dt)


def density(up, dn):
    if _accel.USE_NUMBA:
        return density_loop(up, dn)
    return density_numpy(up, dn)
