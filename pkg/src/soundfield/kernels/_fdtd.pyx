# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled FDTD leapfrog step.

Element-wise identical to kernels/fallback.py (same operation order, no FMA
contraction), so both backends produce bit-identical fields.
"""

import numpy as np

BACKEND = "cython"


def fdtd_step(double[:, ::1] px, double[:, ::1] py,
              double[:, ::1] vx, double[:, ::1] vy,
              double[:, ::1] p,
              double[:, ::1] vax, double[:, ::1] vbx,
              double[:, ::1] vay, double[:, ::1] vby,
              double[:, ::1] pax, double[:, ::1] pbx,
              double[:, ::1] pay, double[:, ::1] pby):
    cdef Py_ssize_t nx = px.shape[0]
    cdef Py_ssize_t ny = px.shape[1]
    cdef Py_ssize_t i, j
    cdef double a, b, dv

    for i in range(nx):
        for j in range(ny):
            p[i, j] = px[i, j] + py[i, j]

    for i in range(nx - 1):
        for j in range(ny):
            a = vax[i, j] * vx[i, j]
            b = vbx[i, j] * (p[i + 1, j] - p[i, j])
            vx[i, j] = a - b
    for i in range(nx):
        for j in range(ny - 1):
            a = vay[i, j] * vy[i, j]
            b = vby[i, j] * (p[i, j + 1] - p[i, j])
            vy[i, j] = a - b

    # velocity outside the grid is zero (rigid truncation behind the PML)
    for i in range(nx):
        for j in range(ny):
            if i == 0:
                dv = vx[0, j] - 0.0
            elif i == nx - 1:
                dv = 0.0 - vx[nx - 2, j]
            else:
                dv = vx[i, j] - vx[i - 1, j]
            a = pax[i, j] * px[i, j]
            b = pbx[i, j] * dv
            px[i, j] = a - b
    for i in range(nx):
        for j in range(ny):
            if j == 0:
                dv = vy[i, 0] - 0.0
            elif j == ny - 1:
                dv = 0.0 - vy[i, ny - 2]
            else:
                dv = vy[i, j] - vy[i, j - 1]
            a = pay[i, j] * py[i, j]
            b = pby[i, j] * dv
            py[i, j] = a - b
