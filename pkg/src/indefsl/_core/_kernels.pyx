# cython: language_level=3
"""Compiled per-node update for the m = 3, k = 1 Cauchy solver."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def z11_m3(double[:, ::1] u, double[:, ::1] v, double dx,
           double[:, ::1] z11, double[:, ::1] alpha):
    """Solve ``det Z = Z11 - Z22 - Z33`` for ``Z11`` at every node.

    ``u`` is the current level, ``v`` the time derivative at that level;
    spatial stencils are centered and periodic. ``alpha`` receives the
    coefficient of ``Z11`` (must stay away from zero).
    """
    cdef Py_ssize_t n2 = u.shape[0], n3 = u.shape[1]
    cdef Py_ssize_t i, j, ip, im, jp, jm
    cdef double idx2 = 1.0 / (dx * dx), i2dx = 0.5 / dx, i4dx2 = 0.25 / (dx * dx)
    cdef double a22, a33, a23, a12, a13, c, beta
    for i in range(n2):
        ip = i + 1 if i + 1 < n2 else 0
        im = i - 1 if i > 0 else n2 - 1
        for j in range(n3):
            jp = j + 1 if j + 1 < n3 else 0
            jm = j - 1 if j > 0 else n3 - 1
            a22 = (u[ip, j] - 2.0 * u[i, j] + u[im, j]) * idx2
            a33 = (u[i, jp] - 2.0 * u[i, j] + u[i, jm]) * idx2
            a23 = (u[ip, jp] - u[ip, jm] - u[im, jp] + u[im, jm]) * i4dx2
            a12 = (v[ip, j] - v[im, j]) * i2dx
            a13 = (v[i, jp] - v[i, jm]) * i2dx
            c = a22 * a33 - a23 * a23 - 1.0
            beta = (-a12 * (a12 * a33 - a23 * a13) + a13 * (a12 * a23 - a22 * a13)
                    + a22 + a33)
            alpha[i, j] = c
            z11[i, j] = -beta / c
