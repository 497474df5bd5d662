"""Numpy implementation of the compiled kernels (same arithmetic, vectorized)."""
import numpy as np


def z11_m3(u, v, dx, z11, alpha):
    """Solve ``det Z = Z11 - Z22 - Z33`` for ``Z11`` at every node (periodic stencils)."""
    up, um = np.roll(u, -1, 0), np.roll(u, 1, 0)
    a22 = (up - 2.0 * u + um) * (1.0 / (dx * dx))
    a33 = (np.roll(u, -1, 1) - 2.0 * u + np.roll(u, 1, 1)) * (1.0 / (dx * dx))
    a23 = (np.roll(up, -1, 1) - np.roll(up, 1, 1) - np.roll(um, -1, 1)
           + np.roll(um, 1, 1)) * (0.25 / (dx * dx))
    a12 = (np.roll(v, -1, 0) - np.roll(v, 1, 0)) * (0.5 / dx)
    a13 = (np.roll(v, -1, 1) - np.roll(v, 1, 1)) * (0.5 / dx)
    c = a22 * a33 - a23 * a23 - 1.0
    beta = -a12 * (a12 * a33 - a23 * a13) + a13 * (a12 * a23 - a22 * a13) + a22 + a33
    alpha[...] = c
    z11[...] = -beta / c
